fn main() {
    let mut out = String::new();
    let code = hybridreach::cli::run(std::env::args_os(), &mut out);
    if code == 0 {
        print!("{out}");
    } else {
        eprint!("{out}");
    }
    std::process::exit(code);
}
