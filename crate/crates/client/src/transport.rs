use std::io::{self, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use pvcscan_protocol::read_frame;

/// Sends one frame and returns the single reply frame.
pub trait Transport {
    fn exchange(&mut self, frame: &[u8]) -> io::Result<Vec<u8>>;
}

/// One TCP connection per exchange.
pub struct TcpTransport {
    pub addr: String,
    pub timeout: Duration,
}

impl TcpTransport {
    pub fn new(addr: impl Into<String>) -> Self {
        TcpTransport {
            addr: addr.into(),
            timeout: Duration::from_secs(30),
        }
    }
}

impl Transport for TcpTransport {
    fn exchange(&mut self, frame: &[u8]) -> io::Result<Vec<u8>> {
        let addr = self
            .addr
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "address did not resolve"))?;
        let mut stream = TcpStream::connect_timeout(&addr, self.timeout)?;
        stream.set_read_timeout(Some(self.timeout))?;
        stream.set_write_timeout(Some(self.timeout))?;
        stream.set_nodelay(true)?;
        stream.write_all(frame)?;
        read_frame(&mut stream)
    }
}

/// Waiting between polls and retries, replaceable in tests.
pub trait Sleeper {
    fn sleep(&mut self, d: Duration);
}

pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&mut self, d: Duration) {
        std::thread::sleep(d);
    }
}
