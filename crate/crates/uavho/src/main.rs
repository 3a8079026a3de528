fn main() {
    std::process::exit(uavho::cli::run());
}
