fn main() {
    std::process::exit(corridor_planner::cli::run());
}
