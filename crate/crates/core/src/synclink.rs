//! The logger's HTTP file service and the ground-station client.
//!
//! The server reads one request line, picks a file with the logger's
//! substring test, sends a fixed header block and streams the file in
//! 1760-byte writes. Serving `ground.csv` deletes both logs, so a client
//! has to fetch `air.csv` first.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::firmware::{SdCardImage, AIR_FILE, GROUND_FILE};

/// Size of the server's send buffer, bytes.
pub const CHUNK_SIZE: usize = 1760;
/// Longest request the server buffers, bytes.
pub const MAX_REQUEST: usize = 8 * 1024;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Which {
    Air,
    Ground,
}

impl Which {
    pub fn file_name(self) -> &'static str {
        match self {
            Which::Air => AIR_FILE,
            Which::Ground => GROUND_FILE,
        }
    }

    /// Request path sent by [`fetch`]. The air path must place "air"
    /// beyond index 5 for the server to pick the air log.
    pub fn request_path(self) -> &'static str {
        match self {
            Which::Air => "/download/air.csv",
            Which::Ground => "/ground.csv",
        }
    }

    pub fn request(self) -> String {
        format!("GET {} HTTP/1.1\r\n\r\n", self.request_path())
    }
}

/// Chooses the file for a request: air only when "air" first occurs after
/// character index 5.
pub fn route(request: &str) -> Which {
    match request.find("air") {
        Some(byte_idx) if request[..byte_idx].chars().count() > 5 => Which::Air,
        _ => Which::Ground,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpFileResponse {
    pub status_line: String,
    pub headers: Vec<String>,
    pub body: Vec<u8>,
}

impl HttpFileResponse {
    pub fn ok(file_name: &str, body: Vec<u8>) -> Self {
        Self {
            status_line: "HTTP/1.1 200 OK".into(),
            headers: vec![
                "Content-Type: text/csv".into(),
                format!("Content-Disposition: attachment; filename=\"{file_name}\""),
                "Connection: close".into(),
            ],
            body,
        }
    }

    /// Status line, headers and the blank line, each ending in CRLF.
    pub fn header_block(&self) -> Vec<u8> {
        let mut out = format!("{}\r\n", self.status_line);
        for h in &self.headers {
            out.push_str(h);
            out.push_str("\r\n");
        }
        out.push_str("\r\n");
        out.into_bytes()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header_block();
        out.extend_from_slice(&self.body);
        out
    }

    /// Splits a raw response into status line, headers and body.
    pub fn parse(raw: &[u8]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Protocol(
                "connection closed without a response".into(),
            ));
        }
        let end = raw
            .windows(4)
            .position(|w| w == b"\r\n\r\n")
            .ok_or_else(|| Error::Protocol("response header block is not terminated".into()))?;
        let head = std::str::from_utf8(&raw[..end])
            .map_err(|_| Error::Protocol("response headers are not UTF-8".into()))?;
        let mut lines = head.split("\r\n");
        let status_line = lines.next().unwrap_or_default().to_string();
        Ok(Self {
            status_line,
            headers: lines.map(str::to_string).collect(),
            body: raw[end + 4..].to_vec(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServeOutcome {
    Served {
        which: Which,
        bytes: usize,
    },
    /// The routed file is not on the card; nothing was sent.
    Missing {
        which: Which,
    },
}

/// Writes the response for `which` to `out`, body in [`CHUNK_SIZE`] writes.
///
/// Serving the ground log removes both logs from `sd`. A missing file
/// produces no output at all.
pub fn serve_file<W: Write>(
    which: Which,
    sd: &mut SdCardImage,
    out: &mut W,
) -> Result<ServeOutcome> {
    let name = which.file_name();
    let Some(body) = sd.read(name).map(<[u8]>::to_vec) else {
        log::warn!("{name} requested but not on the card");
        return Ok(ServeOutcome::Missing { which });
    };
    let response = HttpFileResponse::ok(name, Vec::new());
    out.write_all(&response.header_block()).map_err(transport)?;
    for chunk in body.chunks(CHUNK_SIZE) {
        out.write_all(chunk).map_err(transport)?;
    }
    out.flush().map_err(transport)?;
    if which == Which::Ground {
        sd.remove(AIR_FILE);
        sd.remove(GROUND_FILE);
    }
    Ok(ServeOutcome::Served {
        which,
        bytes: body.len(),
    })
}

fn transport(e: io::Error) -> Error {
    Error::Transport(e.to_string())
}

/// Reads the request line and any header lines up to the blank line.
fn read_request<R: Read>(stream: R) -> Result<String> {
    let mut reader = BufReader::new(stream.take(MAX_REQUEST as u64));
    let mut first = String::new();
    reader.read_line(&mut first).map_err(transport)?;
    if first.is_empty() {
        return Err(Error::Protocol("client sent no request".into()));
    }
    // drain the header so closing the socket does not reset the connection
    let mut line = String::new();
    while first.ends_with('\n') {
        line.clear();
        match reader.read_line(&mut line) {
            Ok(0) | Err(_) => break,
            Ok(_) if line.trim_end().is_empty() => break,
            Ok(_) => {}
        }
    }
    Ok(first)
}

/// Handles one connection on any byte stream.
pub fn handle_connection<S: Read + Write>(
    mut stream: S,
    sd: &mut SdCardImage,
) -> Result<ServeOutcome> {
    let request = read_request(&mut stream)?;
    let which = route(&request);
    log::debug!("request {:?} routed to {which:?}", request.trim_end());
    serve_file(which, sd, &mut stream)
}

/// Serves connections one at a time until `limit` connections have been
/// handled or `stop` is set.
pub fn run_server(
    listener: &TcpListener,
    sd: &mut SdCardImage,
    limit: Option<usize>,
    stop: &AtomicBool,
) -> Result<usize> {
    listener.set_nonblocking(true).map_err(transport)?;
    let mut handled = 0;
    while limit.map_or(true, |n| handled < n) && !stop.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((stream, peer)) => {
                stream.set_nonblocking(false).map_err(transport)?;
                stream
                    .set_read_timeout(Some(DEFAULT_TIMEOUT))
                    .map_err(transport)?;
                match handle_connection(&stream, sd) {
                    Ok(outcome) => log::info!("{peer}: {outcome:?}"),
                    Err(e) => log::warn!("{peer}: {e}"),
                }
                let _ = stream.shutdown(Shutdown::Both);
                handled += 1;
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                thread::sleep(Duration::from_millis(5))
            }
            Err(e) => return Err(transport(e)),
        }
    }
    Ok(handled)
}

/// Source of log files for [`sync`].
pub trait Transport {
    fn fetch(&mut self, which: Which) -> Result<Vec<u8>>;
}

/// Client side over TCP.
#[derive(Debug, Clone)]
pub struct TcpTransport {
    pub host: String,
    pub port: u16,
    pub timeout: Duration,
}

impl TcpTransport {
    pub fn new(host: impl Into<String>, port: u16) -> Self {
        Self {
            host: host.into(),
            port,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

impl Transport for TcpTransport {
    fn fetch(&mut self, which: Which) -> Result<Vec<u8>> {
        fetch(&self.host, self.port, which, self.timeout)
    }
}

/// Downloads one log over TCP and returns its body.
pub fn fetch(host: &str, port: u16, which: Which, timeout: Duration) -> Result<Vec<u8>> {
    let addrs: Vec<SocketAddr> = (host, port)
        .to_socket_addrs()
        .map_err(|e| Error::Transport(format!("cannot resolve {host}:{port}: {e}")))?
        .collect();
    let mut last = None;
    let mut stream = None;
    for addr in addrs {
        match TcpStream::connect_timeout(&addr, timeout) {
            Ok(s) => {
                stream = Some(s);
                break;
            }
            Err(e) => last = Some(e),
        }
    }
    let mut stream = stream.ok_or_else(|| {
        Error::Transport(format!(
            "cannot connect to {host}:{port}: {}",
            last.map_or_else(|| "no address".to_string(), |e| e.to_string())
        ))
    })?;
    stream.set_read_timeout(Some(timeout)).map_err(transport)?;
    stream.set_write_timeout(Some(timeout)).map_err(transport)?;
    stream
        .write_all(which.request().as_bytes())
        .map_err(transport)?;
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).map_err(transport)?;
    body_of(which, &raw)
}

fn body_of(which: Which, raw: &[u8]) -> Result<Vec<u8>> {
    let response = HttpFileResponse::parse(raw)
        .map_err(|e| Error::Protocol(format!("{}: {e}", which.file_name())))?;
    if response.status_line != "HTTP/1.1 200 OK" {
        return Err(Error::Protocol(format!(
            "unexpected status {:?}",
            response.status_line
        )));
    }
    Ok(response.body)
}

/// In-memory stream that records the size of every write.
#[derive(Debug, Default)]
pub struct CountingStream {
    input: io::Cursor<Vec<u8>>,
    pub output: Vec<u8>,
    pub writes: Vec<usize>,
}

impl CountingStream {
    pub fn with_request(request: &[u8]) -> Self {
        Self {
            input: io::Cursor::new(request.to_vec()),
            ..Default::default()
        }
    }
}

impl Read for CountingStream {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.input.read(buf)
    }
}

impl Write for CountingStream {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.writes.push(buf.len());
        self.output.extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Serves requests straight from a card image without sockets.
#[derive(Debug)]
pub struct InProcessTransport<'a> {
    pub sd: &'a mut SdCardImage,
    /// Write sizes of every response, in order.
    pub writes: Vec<Vec<usize>>,
}

impl<'a> InProcessTransport<'a> {
    pub fn new(sd: &'a mut SdCardImage) -> Self {
        Self {
            sd,
            writes: Vec::new(),
        }
    }
}

impl Transport for InProcessTransport<'_> {
    fn fetch(&mut self, which: Which) -> Result<Vec<u8>> {
        let mut stream = CountingStream::with_request(which.request().as_bytes());
        handle_connection(&mut stream, self.sd)?;
        self.writes.push(stream.writes);
        body_of(which, &stream.output)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncResult {
    pub air: Vec<u8>,
    pub ground: Vec<u8>,
    pub fetched_at: DateTime<Utc>,
}

/// Fetches the air log, then the ground log. Fails unless both arrive.
pub fn sync<T: Transport>(transport: &mut T) -> Result<SyncResult> {
    let air = transport.fetch(Which::Air)?;
    let ground = transport.fetch(Which::Ground)?;
    Ok(SyncResult {
        air,
        ground,
        fetched_at: Utc::now(),
    })
}

/// Writes both logs into `dir`. Nothing is left behind if either write fails.
pub fn persist(result: &SyncResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let air_tmp = dir.join(".air.csv.part");
    let ground_tmp = dir.join(".ground.csv.part");
    let written = fs::write(&air_tmp, &result.air)
        .and_then(|_| fs::write(&ground_tmp, &result.ground))
        .and_then(|_| fs::rename(&air_tmp, dir.join(AIR_FILE)))
        .and_then(|_| fs::rename(&ground_tmp, dir.join(GROUND_FILE)));
    if let Err(e) = written {
        let _ = fs::remove_file(&air_tmp);
        let _ = fs::remove_file(&ground_tmp);
        return Err(e.into());
    }
    Ok(())
}
