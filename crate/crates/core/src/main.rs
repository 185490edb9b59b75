fn main() {
    std::process::exit(ti2lh::cli::main_exit_code());
}
