use std::io;

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let stdin = io::stdin();
    let code = ijpred::cli::run_command(
        &argv,
        &mut stdin.lock(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    std::process::exit(code);
}
