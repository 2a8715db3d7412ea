//! Thin binary wrapper: all logic lives in [`bellmax::cli`].

fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(bellmax::cli::run(args));
}
