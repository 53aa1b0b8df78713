fn main() {
    // Die quietly when a downstream pager closes the pipe, like any other
    // line-oriented tool.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(parashift::cli::run());
}
