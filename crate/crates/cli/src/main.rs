use std::io::Write;

fn main() {
    let out = impartial_cli::run(std::env::args_os());
    // a closed pipe on stdout is not worth reporting
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    std::process::exit(out.code);
}
