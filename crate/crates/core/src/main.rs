fn main() {
    std::process::exit(boxlabel::cli::run(std::env::args_os()));
}
