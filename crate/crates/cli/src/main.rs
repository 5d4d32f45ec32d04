fn main() {
    let args: Vec<String> = std::env::args().collect();
    let code = std::panic::catch_unwind(|| {
        let mut out = std::io::stdout();
        let mut err = std::io::stderr();
        liesym_cli::run(&args, &mut out, &mut err)
    })
    .unwrap_or_else(|_| {
        eprintln!("error: internal invariant violation");
        1
    });
    std::process::exit(code);
}
