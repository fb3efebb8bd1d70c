use std::io::{stderr, stdout};
use std::process::exit;

fn main() {
    let code = domim::client::cli::run(std::env::args_os(), &mut stdout(), &mut stderr());
    exit(code);
}
