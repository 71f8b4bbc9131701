//! Deterministic discrete-event simulator of Multipath QUIC.
//!
//! Both packet number space designs are implemented end to end: a single
//! application space shared by every path ([`Design::Spns`]) and one space per
//! path acknowledged with ACK_MP frames ([`Design::Mpns`]). On top of the
//! protocol machinery sits an experiment harness that generates the
//! homogeneous and heterogeneous 2-path and 3-path studies, runs them and
//! reports transfer time, acknowledgment ranges, retransmissions and ACK
//! overhead.
//!
//! The crate is organised bottom-up:
//!
//! - [`wire`]: varints, frames and packet sizes.
//! - [`acktrack`]: receiver-side range tracking, range selection and ACK scheduling.
//! - [`sendtrack`]: packet numbering, RTT estimation, loss detection and retransmission accounting.
//! - [`cc`]: Cubic, BBR and pacing.
//! - [`path`]: connection IDs, multipath negotiation and path validation.
//! - [`endpoint`]: client/server connections composing the above.
//! - [`netsim`]: event queue, drop-tail links and the simulation driver.
//! - [`harness`]: scenarios, space-filling designs, metrics and reports.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod acktrack;
pub mod cc;
pub mod endpoint;
pub mod harness;
pub mod netsim;
pub mod path;
pub mod sendtrack;
pub mod time;
pub mod trace;
pub mod wire;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use time::SimTime;

/// Packet number space design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    /// One application packet number space shared by all paths.
    Spns,
    /// One packet number space per path.
    Mpns,
}

impl Design {
    /// Packet number space used for packets on `path_id`.
    pub fn space_for(self, path_id: u64) -> u64 {
        match self {
            Design::Spns => 0,
            Design::Mpns => path_id,
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Design::Spns => "spns",
            Design::Mpns => "mpns",
        })
    }
}

impl FromStr for Design {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "spns" | "single" => Ok(Design::Spns),
            "mpns" | "multiple" => Ok(Design::Mpns),
            other => Err(format!("unknown design `{other}` (expected spns or mpns)")),
        }
    }
}

/// Designs an endpoint offers during multipath negotiation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DesignSupport {
    pub spns: bool,
    pub mpns: bool,
}

impl DesignSupport {
    pub const NONE: DesignSupport = DesignSupport {
        spns: false,
        mpns: false,
    };
    pub const BOTH: DesignSupport = DesignSupport {
        spns: true,
        mpns: true,
    };

    pub fn only(design: Design) -> Self {
        match design {
            Design::Spns => DesignSupport {
                spns: true,
                mpns: false,
            },
            Design::Mpns => DesignSupport {
                spns: false,
                mpns: true,
            },
        }
    }

    pub fn supports(self, design: Design) -> bool {
        match design {
            Design::Spns => self.spns,
            Design::Mpns => self.mpns,
        }
    }
}

/// Which end of the connection an event belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Client,
    Server,
}

impl Side {
    pub fn peer(self) -> Side {
        match self {
            Side::Client => Side::Server,
            Side::Server => Side::Client,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Client => "client",
            Side::Server => "server",
        })
    }
}
