//! Minimal stderr logger driven by the `CAMPAIGN_LOG` environment variable:
//! `error`, `warn` (default), `info` or `debug`.

use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Error = 0,
    Warn = 1,
    Info = 2,
    Debug = 3,
}

static LEVEL: OnceLock<Level> = OnceLock::new();

pub fn level() -> Level {
    *LEVEL.get_or_init(|| match std::env::var("CAMPAIGN_LOG").as_deref() {
        Ok("error") => Level::Error,
        Ok("info") => Level::Info,
        Ok("debug") => Level::Debug,
        _ => Level::Warn,
    })
}

pub fn enabled(at: Level) -> bool {
    at <= level()
}

macro_rules! log_at {
    ($level:expr, $tag:expr, $($arg:tt)*) => {
        if $crate::logging::enabled($level) {
            eprintln!(concat!($tag, " {}"), format_args!($($arg)*));
        }
    };
}

macro_rules! warn_log {
    ($($arg:tt)*) => { log_at!($crate::logging::Level::Warn, "[warn]", $($arg)*) };
}

macro_rules! info_log {
    ($($arg:tt)*) => { log_at!($crate::logging::Level::Info, "[info]", $($arg)*) };
}

macro_rules! debug_log {
    ($($arg:tt)*) => { log_at!($crate::logging::Level::Debug, "[debug]", $($arg)*) };
}
