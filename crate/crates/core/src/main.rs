fn main() {
    std::process::exit(ilp_gadgets::cli::main_with_args(std::env::args_os()));
}
