//! The scan client: seal an inventory into a scan request, poll for the
//! report with the returned token, and render it.

pub mod error;
pub mod render;
pub mod session;
pub mod transport;

pub use error::*;
pub use render::{exceeds_threshold, render_report, render_text, Format};
pub use session::{Client, ClientConfig};
pub use transport::{Sleeper, TcpTransport, ThreadSleeper, Transport};
