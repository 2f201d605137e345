use operad_forge::cli::{configure_threads, execute, exit_code};

fn main() {
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let (code, out, err) = execute(&argv);
    print!("{out}");
    eprint!("{err}");
    std::process::exit(code);
}
