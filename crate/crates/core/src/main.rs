fn main() {
    std::process::exit(bmatrix_interplay::cli::main());
}
