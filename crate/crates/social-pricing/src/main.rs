fn main() {
    std::process::exit(social_pricing::cli::run());
}
