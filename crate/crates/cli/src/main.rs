fn main() {
    std::process::exit(cone_iso::run(std::env::args_os()));
}
