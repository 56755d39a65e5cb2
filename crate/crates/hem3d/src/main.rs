fn main() {
    std::process::exit(hem3d::main_with(std::env::args_os()));
}
