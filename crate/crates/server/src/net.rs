//! TCP front end. Each connection reads frames and hands them to
//! [`Server::handle_frame`] on the blocking pool.

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use pvcscan_protocol::MAX_FRAME_LEN;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::watch;
use tracing::{debug, info, warn};

use crate::service::Server;

const IDLE_TIMEOUT: Duration = Duration::from_secs(30);

async fn read_frame(stream: &mut TcpStream) -> std::io::Result<Vec<u8>> {
    let mut prefix = [0u8; 4];
    stream.read_exact(&mut prefix).await?;
    let len = u32::from_be_bytes(prefix) as usize;
    if len > MAX_FRAME_LEN {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "frame too large"));
    }
    let mut frame = vec![0u8; 4 + len];
    frame[..4].copy_from_slice(&prefix);
    stream.read_exact(&mut frame[4..]).await?;
    Ok(frame)
}

async fn handle_connection(server: Arc<Server>, mut stream: TcpStream, peer: SocketAddr) {
    loop {
        let frame = match tokio::time::timeout(IDLE_TIMEOUT, read_frame(&mut stream)).await {
            Ok(Ok(f)) => f,
            Ok(Err(e)) => {
                debug!(%peer, error = %e, "connection closed");
                return;
            }
            Err(_) => return,
        };
        let s = server.clone();
        let response = tokio::task::spawn_blocking(move || s.handle_frame(&frame, peer.ip()))
            .await
            .ok()
            .flatten();
        let Some(response) = response else { return };
        if stream.write_all(&response.frame).await.is_err() || response.close {
            let _ = stream.shutdown().await;
            return;
        }
    }
}

/// Accepts connections until `shutdown` resolves. Also reloads a newer
/// database and flushes the cache every `flush_interval_secs`.
pub async fn serve(server: Arc<Server>, listener: TcpListener, shutdown: impl Future<Output = ()>) {
    tokio::pin!(shutdown);
    let mut tick = tokio::time::interval(Duration::from_secs(server.config().flush_interval_secs));
    tick.tick().await;
    info!(addr = ?listener.local_addr().ok(), "listening");
    loop {
        tokio::select! {
            accepted = listener.accept() => match accepted {
                Ok((stream, peer)) => {
                    tokio::spawn(handle_connection(server.clone(), stream, peer));
                }
                Err(e) => warn!(error = %e, "accept failed"),
            },
            _ = tick.tick() => {
                let db = server.db().clone();
                tokio::task::spawn_blocking(move || {
                    if let Err(e) = db.reload_if_newer() {
                        warn!(error = %e, "reload failed");
                    }
                    if let Err(e) = db.flush() {
                        warn!(error = %e, "periodic flush failed");
                    }
                });
            }
            _ = &mut shutdown => break,
        }
    }
}

/// A server running on its own runtime thread.
pub struct RunningServer {
    pub addr: SocketAddr,
    server: Arc<Server>,
    stop: watch::Sender<bool>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl RunningServer {
    /// Binds `addr`, starts the workers and serves in the background.
    pub fn start(server: Arc<Server>, addr: SocketAddr) -> std::io::Result<Self> {
        let std_listener = std::net::TcpListener::bind(addr)?;
        std_listener.set_nonblocking(true)?;
        let addr = std_listener.local_addr()?;
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .thread_name("scan-net")
            .build()?;
        let (stop, mut stopped) = watch::channel(false);
        server.start_workers();
        let s = server.clone();
        let thread = std::thread::Builder::new().name("scan-server".into()).spawn(move || {
            runtime.block_on(async move {
                let listener = match TcpListener::from_std(std_listener) {
                    Ok(l) => l,
                    Err(e) => {
                        warn!(error = %e, "listener setup failed");
                        return;
                    }
                };
                serve(s, listener, async move {
                    let _ = stopped.changed().await;
                })
                .await;
            });
        })?;
        Ok(RunningServer {
            addr,
            server,
            stop,
            thread: Some(thread),
        })
    }

    pub fn server(&self) -> &Arc<Server> {
        &self.server
    }

    pub fn stop(mut self) {
        self.halt();
    }

    fn halt(&mut self) {
        let _ = self.stop.send(true);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
            self.server.shutdown();
        }
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        self.halt();
    }
}
