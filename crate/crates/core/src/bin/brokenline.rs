fn main() {
    std::process::exit(brokenline::report::main_with_args(std::env::args_os()));
}
