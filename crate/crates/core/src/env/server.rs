//! Serving the protocol over byte streams and TCP.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, ToSocketAddrs};
use std::sync::Arc;

use super::protocol::Session;
use super::{Environment, Scenario};
use crate::{Error, Result};

/// Answers requests line by line until `close` or end of input.
pub fn serve<R: BufRead, W: Write>(
    env: Environment,
    reader: R,
    mut writer: W,
) -> std::io::Result<()> {
    let mut session = Session::new(env);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = session.handle_line(&line);
        writeln!(writer, "{}", response.to_line())?;
        writer.flush()?;
        if session.is_closed() {
            break;
        }
    }
    Ok(())
}

pub fn serve_stdio(scenario: Arc<Scenario>) -> std::io::Result<()> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    serve(Environment::new(scenario), stdin.lock(), stdout.lock())
}

/// Accepts connections forever; every connection gets its own environment
/// on its own thread. `on_bind` receives the bound address.
pub fn serve_tcp<A: ToSocketAddrs>(
    scenario: Arc<Scenario>,
    addr: A,
    on_bind: impl FnOnce(std::net::SocketAddr),
) -> Result<()> {
    let listener = TcpListener::bind(addr).map_err(|e| Error::io("tcp listener", e))?;
    let local = listener
        .local_addr()
        .map_err(|e| Error::io("tcp listener", e))?;
    on_bind(local);
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(_) => continue,
        };
        // one small line each way per request; do not let Nagle batch them
        let _ = stream.set_nodelay(true);
        let scenario = scenario.clone();
        std::thread::spawn(move || {
            let reader = match stream.try_clone() {
                Ok(s) => BufReader::new(s),
                Err(_) => return,
            };
            // a dropped client just ends its session
            let _ = serve(Environment::new(scenario), reader, stream);
        });
    }
    Ok(())
}
