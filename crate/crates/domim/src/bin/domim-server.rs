use std::path::PathBuf;
use std::process::exit;
use std::thread;
use std::time::Duration;

use clap::Parser;

use domim::server::{Server, ServerConfig};
use domim::signal;

#[derive(Parser, Debug)]
#[command(name = "domim-server", version, about = "Medical imaging record and image server")]
struct Args {
    /// TCP port to listen on (0 picks an ephemeral port)
    #[arg(long, env = "DOMIM_PORT", default_value_t = domim::server::DEFAULT_PORT)]
    port: u16,

    /// Directory for the record index and blob files
    #[arg(long = "data-dir", env = "DOMIM_DATA_DIR")]
    data_dir: PathBuf,

    /// Octet-stream chunk size in bytes
    #[arg(long = "chunk-size", default_value_t = domim::server::DEFAULT_CHUNK_SIZE)]
    chunk_size: u32,

    /// Concurrent connection limit
    #[arg(long = "max-connections", default_value_t = domim::server::DEFAULT_MAX_CONNECTIONS)]
    max_connections: usize,
}

fn main() {
    let args = Args::parse();
    let config = ServerConfig {
        port: args.port,
        data_dir: args.data_dir,
        chunk_size: args.chunk_size,
        max_connections: args.max_connections,
    };

    let server = match Server::bind(config) {
        Ok(server) => server,
        Err(e) => {
            eprintln!("error: {e}");
            exit(1);
        }
    };
    println!("listening on 0.0.0.0:{}", server.local_port());

    signal::install(&[libc::SIGINT, libc::SIGTERM]);
    let handle = server.shutdown_handle();
    thread::spawn(move || loop {
        if signal::triggered() {
            handle.trigger();
            return;
        }
        thread::sleep(Duration::from_millis(50));
    });

    if let Err(e) = server.run() {
        eprintln!("error: {e}");
        exit(1);
    }
}
