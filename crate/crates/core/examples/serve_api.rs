//! Serves the HTTP API over a store prepared by the `run_batch` example.
//!
//! ```text
//! cargo run --release --example run_batch -- /tmp/nw
//! cargo run --release --example serve_api -- /tmp/nw 8080
//! curl localhost:8080/api/events
//! curl -X POST localhost:8080/api/score -H 'content-type: application/json' -d '{"text": "Outrageous lies!"}'
//! ```

use std::net::SocketAddr;
use std::path::PathBuf;

use newswatch::config::Config;
use newswatch::service::{serve, ServeOptions};

fn main() -> newswatch::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let data_dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("newswatch-example-store"));
    let port: u16 = args.next().map_or(8080, |a| a.parse().expect("port"));

    let config = Config {
        data_dir,
        ..Config::default()
    };
    let options = ServeOptions {
        addr: SocketAddr::from(([127, 0, 0, 1], port)),
        scheduler: None,
    };
    tokio::runtime::Runtime::new()
        .expect("tokio runtime")
        .block_on(serve(config, options))
}
