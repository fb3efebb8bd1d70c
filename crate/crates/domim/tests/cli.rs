//! Command-line behavior of the two binaries: exit codes, frozen output
//! grammar, and signal handling.

mod common;

use std::fs;
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use tempfile::TempDir;

use common::{client, TestServer};

fn client_local(args: &[&str]) -> (i32, String, String) {
    // Local-only subcommands never touch the network; port 1 is never dialed.
    client(1, args)
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let output = Command::new(env!("CARGO_BIN_EXE_domim-client"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("Usage"), "expected usage text, got: {err}");
}

#[test]
fn unknown_subcommand_exits_1() {
    let (code, _, _) = client_local(&["foo"]);
    assert_eq!(code, 1);
}

#[test]
fn missing_required_flag_exits_1() {
    let (code, _, err) = client_local(&["add-patient", "--name", "No Id"]);
    assert_eq!(code, 1);
    assert!(err.contains("--id"));
}

#[test]
fn empty_id_exits_1() {
    let (code, _, _) = client_local(&["add-patient", "--id", ""]);
    assert_eq!(code, 1);
}

#[test]
fn unreachable_host_exits_2_within_timeout() {
    let start = std::time::Instant::now();
    // 203.0.113.0/24 is reserved for documentation; nothing answers.
    let output = Command::new(env!("CARGO_BIN_EXE_domim-client"))
        .args([
            "--host",
            "203.0.113.1",
            "--port",
            "9047",
            "--timeout-ms",
            "700",
            "add-patient",
            "--id",
            "001",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(start.elapsed() < Duration::from_secs(10));
}

#[test]
fn export_writes_exact_pgm() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.dcm");
    let output = dir.path().join("out.pgm");
    fs::write(
        &input,
        common::image_file_with_pixels(2, 2, &[0x00, 0x55, 0xAA, 0xFF]),
    )
    .unwrap();

    let (code, out, _) = client_local(&[
        "export",
        "--in",
        input.to_str().unwrap(),
        "--out",
        output.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(out, "rows=2 cols=2 frames=1\n");
    let pgm = fs::read(&output).unwrap();
    assert_eq!(pgm, b"P5\n2 2\n255\n\x00\x55\xAA\xFF");
}

#[test]
fn export_rejects_non_dicom_with_error_name() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("junk.bin");
    fs::write(&input, vec![0u8; 500]).unwrap();
    let (code, out, _) = client_local(&[
        "export",
        "--in",
        input.to_str().unwrap(),
        "--out",
        dir.path().join("x.pgm").to_str().unwrap(),
    ]);
    assert_eq!(code, 4);
    assert!(out.contains("MissingMagic"), "got: {out}");
}

#[test]
fn export_frame_out_of_range() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.dcm");
    let (bytes, _) = common::image_file(2, 2);
    fs::write(&input, bytes).unwrap();
    let (code, out, _) = client_local(&[
        "export",
        "--in",
        input.to_str().unwrap(),
        "--out",
        dir.path().join("x.pgm").to_str().unwrap(),
        "--frame",
        "1",
    ]);
    assert_eq!(code, 4);
    assert!(out.contains("FrameOutOfRange"), "got: {out}");
}

#[test]
fn inspect_dumps_elements_in_file_order() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("min.dcm");
    fs::write(&input, common::minimal_patient_file()).unwrap();
    let (code, out, _) = client_local(&["inspect", "--in", input.to_str().unwrap()]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines,
        vec![
            "(0002,0010) UI 20 1.2.840.10008.1.2.1",
            "(0010,0020) LO 4 001",
        ]
    );
}

#[test]
fn inspect_empty_dataset_shows_only_meta() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("meta-only.dcm");
    let bytes = common::minimal_patient_file();
    // Strip the one data-set element (12 bytes).
    fs::write(&input, &bytes[..bytes.len() - 12]).unwrap();
    let (code, out, _) = client_local(&["inspect", "--in", input.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.lines().all(|l| l.starts_with("(0002,")), "got: {out}");
}

#[test]
fn inspect_truncated_file_exits_4() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("trunc.dcm");
    let bytes = common::minimal_patient_file();
    fs::write(&input, &bytes[..bytes.len() - 3]).unwrap();
    let (code, out, _) = client_local(&["inspect", "--in", input.to_str().unwrap()]);
    assert_eq!(code, 4);
    assert!(out.contains("LengthOverrun"), "got: {out}");
}

#[test]
fn upload_unreadable_path_exits_4() {
    let dir = TempDir::new().unwrap();
    let server = TestServer::start(&dir.path().join("data"));
    let (code, _, _) = client(
        server.port,
        &["upload-image", "--id", "001", "--file", "/definitely/not/here.dcm"],
    );
    assert_eq!(code, 4);
}

#[test]
fn download_to_unwritable_path_exits_4() {
    let dir = TempDir::new().unwrap();
    let server = TestServer::start(&dir.path().join("data"));
    let (code, _, _) = client(server.port, &["add-patient", "--id", "001"]);
    assert_eq!(code, 0);
    let payload = dir.path().join("p.bin");
    fs::write(&payload, b"data").unwrap();
    let (code, _, _) = client(
        server.port,
        &["upload-image", "--id", "001", "--file", payload.to_str().unwrap()],
    );
    assert_eq!(code, 0);
    let (code, _, _) = client(
        server.port,
        &["download-image", "--name", "p.bin", "--out", "/nonexistent-dir/out.bin"],
    );
    assert_eq!(code, 4);
}

#[test]
fn upload_to_unknown_patient_exits_3() {
    let dir = TempDir::new().unwrap();
    let server = TestServer::start(&dir.path().join("data"));
    let payload = dir.path().join("p.bin");
    fs::write(&payload, b"data").unwrap();
    let (code, out, _) = client(
        server.port,
        &["upload-image", "--id", "ghost", "--file", payload.to_str().unwrap()],
    );
    assert_eq!(code, 3);
    assert!(out.contains("404"), "got: {out}");
}

#[test]
fn download_unknown_name_exits_3() {
    let dir = TempDir::new().unwrap();
    let server = TestServer::start(&dir.path().join("data"));
    let (code, _, _) = client(
        server.port,
        &["download-image", "--name", "nothing.bin", "--out", dir.path().join("o").to_str().unwrap()],
    );
    assert_eq!(code, 3);
}

#[test]
fn server_refuses_port_already_in_use() {
    let dir = TempDir::new().unwrap();
    let holder = TestServer::start(&dir.path().join("d1"));
    let output = Command::new(env!("CARGO_BIN_EXE_domim-server"))
        .args(["--port", &holder.port.to_string(), "--data-dir"])
        .arg(dir.path().join("d2"))
        .output()
        .unwrap();
    assert_ne!(output.status.code(), Some(0));
    let out = String::from_utf8_lossy(&output.stdout);
    assert!(
        !out.contains("up and ready"),
        "no ready line may print on a failed bind: {out}"
    );
}

#[test]
fn get_patient_prints_eleven_lines() {
    let dir = TempDir::new().unwrap();
    let server = TestServer::start(&dir.path().join("data"));
    let (code, _, _) = client(
        server.port,
        &["add-patient", "--id", "001", "--name", "Test Patient", "--city", "Springfield"],
    );
    assert_eq!(code, 0);
    let (code, out, _) = client(server.port, &["get-patient", "--id", "001"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0], "name: Test Patient");
    assert_eq!(lines[1], "patient_id: 001");
    assert_eq!(lines[3], "city: Springfield");
    assert_eq!(lines[10], "files: ");

    // Attached files join with commas, in attachment order.
    for name in ["a.bin", "b.bin"] {
        let path = dir.path().join(name);
        fs::write(&path, b"x").unwrap();
        let (code, _, _) = client(
            server.port,
            &["upload-image", "--id", "001", "--file", path.to_str().unwrap()],
        );
        assert_eq!(code, 0);
    }
    let (_, out, _) = client(server.port, &["get-patient", "--id", "001"]);
    assert_eq!(out.lines().last(), Some("files: a.bin,b.bin"));

    let (code, _, _) = client(server.port, &["get-patient", "--id", "missing"]);
    assert_eq!(code, 3);
}

#[test]
fn watch_idle_channel_interrupts_cleanly() {
    let dir = TempDir::new().unwrap();
    let server = TestServer::start(&dir.path().join("data"));
    let watcher = Command::new(env!("CARGO_BIN_EXE_domim-client"))
        .args([
            "--host",
            "127.0.0.1",
            "--port",
            &server.port.to_string(),
            "watch",
            "--channel",
            "image.stored",
        ])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    thread::sleep(Duration::from_secs(1));
    unsafe {
        libc::kill(watcher.id() as libc::pid_t, libc::SIGINT);
    }
    let output = watcher.wait_with_output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(output.stdout.is_empty(), "idle watch must print nothing");
}

#[test]
fn watch_sees_upload_event_and_dies_with_server() {
    let dir = TempDir::new().unwrap();
    let mut server = TestServer::start(&dir.path().join("data"));
    let (code, _, _) = client(server.port, &["add-patient", "--id", "001"]);
    assert_eq!(code, 0);

    let watcher = Command::new(env!("CARGO_BIN_EXE_domim-client"))
        .args([
            "--host",
            "127.0.0.1",
            "--port",
            &server.port.to_string(),
            "watch",
            "--channel",
            "image.stored",
        ])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    thread::sleep(Duration::from_millis(600));

    let payload = dir.path().join("scan.dcm");
    fs::write(&payload, b"image bytes").unwrap();
    let (code, _, _) = client(
        server.port,
        &["upload-image", "--id", "001", "--file", payload.to_str().unwrap()],
    );
    assert_eq!(code, 0);
    thread::sleep(Duration::from_millis(600));

    // Killing the server ends the watch with a network failure.
    server.kill();
    let output = watcher.wait_with_output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let out = String::from_utf8_lossy(&output.stdout);
    let events: Vec<&str> = out.lines().collect();
    assert_eq!(events.len(), 1, "expected exactly one event line, got: {out}");
    let fields: Vec<&str> = events[0].split(' ').collect();
    assert_eq!(fields.len(), 5);
    assert_eq!(fields[1], "image.stored");
    assert_eq!(fields[2], "001");
    assert_eq!(fields[3], "scan.dcm");
}

#[test]
fn repeated_reads_are_idempotent() {
    let dir = TempDir::new().unwrap();
    let server = TestServer::start(&dir.path().join("data"));
    client(server.port, &["add-patient", "--id", "001", "--name", "N"]);
    let (_, first, _) = client(server.port, &["get-patient", "--id", "001"]);
    let (_, second, _) = client(server.port, &["get-patient", "--id", "001"]);
    assert_eq!(first, second);
}
