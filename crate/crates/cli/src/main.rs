fn main() {
    std::process::exit(lattice_heat_cli::run(std::env::args_os()));
}
