use std::io::Write;

fn main() {
    let (stdout, stderr, code) = bagged_ci::cli::run_with_args(std::env::args_os());
    print!("{stdout}");
    eprint!("{stderr}");
    let _ = std::io::stdout().flush();
    std::process::exit(code);
}
