//! Connection IDs, multipath negotiation and path validation.
//!
//! A path is identified by the sequence number of the Destination Connection
//! ID used on it, so path `p` uses CID sequence `p` in both directions.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::wire::{ConnectionId, Frame};
use crate::{Design, DesignSupport, SimTime};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("no unused connection ID to open a path")]
    NoUnusedCid,
    #[error("active connection ID limit {0} exceeded")]
    CidLimitExceeded(u64),
    #[error("unknown path {0}")]
    UnknownPath(u64),
    #[error("handshake not complete")]
    HandshakeIncomplete,
}

/// Picks the design both endpoints support, preferring per-path spaces.
/// `None` means multipath is disabled.
pub fn negotiate(client: DesignSupport, server: DesignSupport) -> Option<Design> {
    [Design::Mpns, Design::Spns]
        .into_iter()
        .find(|&d| client.supports(d) && server.supports(d))
}

/// Connection IDs the peer issued to us, keyed by sequence number.
#[derive(Clone, Debug, Default)]
pub struct CidRegistry {
    issued: BTreeMap<u64, ConnectionId>,
    in_use: BTreeMap<u64, bool>,
    active_limit: u64,
}

impl CidRegistry {
    pub fn new(active_limit: u64) -> Self {
        CidRegistry {
            active_limit,
            ..Self::default()
        }
    }

    pub fn active_limit(&self) -> u64 {
        self.active_limit
    }

    /// Records CID `seq`. Fails once more than `active_limit` CIDs would be active.
    pub fn issue(&mut self, seq: u64, cid: ConnectionId) -> Result<(), PathError> {
        if self.issued.contains_key(&seq) {
            return Ok(());
        }
        if self.issued.len() as u64 >= self.active_limit {
            return Err(PathError::CidLimitExceeded(self.active_limit));
        }
        self.issued.insert(seq, cid);
        self.in_use.insert(seq, false);
        Ok(())
    }

    pub fn get(&self, seq: u64) -> Option<ConnectionId> {
        self.issued.get(&seq).copied()
    }

    pub fn contains(&self, seq: u64) -> bool {
        self.issued.contains_key(&seq)
    }

    pub fn len(&self) -> usize {
        self.issued.len()
    }

    pub fn is_empty(&self) -> bool {
        self.issued.is_empty()
    }

    /// Lowest CID sequence number not yet bound to a path.
    pub fn first_unused(&self) -> Option<u64> {
        self.in_use.iter().find(|(_, &used)| !used).map(|(&s, _)| s)
    }

    pub fn mark_used(&mut self, seq: u64) {
        if let Some(u) = self.in_use.get_mut(&seq) {
            *u = true;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathState {
    Unused,
    Probing,
    Validated,
    /// Validated and carrying application data.
    Active,
}

impl PathState {
    pub fn is_validated(self) -> bool {
        matches!(self, PathState::Validated | PathState::Active)
    }
}

impl fmt::Display for PathState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathState::Unused => "unused",
            PathState::Probing => "probing",
            PathState::Validated => "validated",
            PathState::Active => "active",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathRecord {
    pub path_id: u64,
    pub state: PathState,
    pub challenge: Option<[u8; 8]>,
    pub challenge_sent: Option<SimTime>,
}

/// Result of handling a PATH_CHALLENGE or PATH_RESPONSE.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PathFrameOutcome {
    /// Frames to send back on the same path.
    pub replies: Vec<Frame>,
    pub validated: bool,
    /// Round trip measured by a successful challenge.
    pub rtt: Option<Duration>,
}

/// Validation state of every path of one endpoint.
#[derive(Clone, Debug)]
pub struct PathManager {
    paths: BTreeMap<u64, PathRecord>,
    rng: ChaCha8Rng,
}

impl PathManager {
    pub fn new(seed: u64) -> Self {
        PathManager {
            paths: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Registers the handshake path, validated by the handshake itself.
    pub fn add_initial_path(&mut self, path_id: u64) {
        self.paths.insert(
            path_id,
            PathRecord {
                path_id,
                state: PathState::Active,
                challenge: None,
                challenge_sent: None,
            },
        );
    }

    pub fn get(&self, path_id: u64) -> Option<&PathRecord> {
        self.paths.get(&path_id)
    }

    pub fn state(&self, path_id: u64) -> PathState {
        self.paths
            .get(&path_id)
            .map_or(PathState::Unused, |p| p.state)
    }

    pub fn paths(&self) -> impl Iterator<Item = &PathRecord> {
        self.paths.values()
    }

    pub fn validated_paths(&self) -> Vec<u64> {
        self.paths
            .values()
            .filter(|p| p.state.is_validated())
            .map(|p| p.path_id)
            .collect()
    }

    pub fn set_active(&mut self, path_id: u64) {
        if let Some(p) = self.paths.get_mut(&path_id) {
            if p.state == PathState::Validated {
                p.state = PathState::Active;
            }
        }
    }

    fn challenge(&mut self, path_id: u64, now: SimTime) -> Frame {
        let mut data = [0u8; 8];
        self.rng.fill(&mut data);
        let rec = self.paths.entry(path_id).or_insert(PathRecord {
            path_id,
            state: PathState::Unused,
            challenge: None,
            challenge_sent: None,
        });
        rec.state = PathState::Probing;
        rec.challenge = Some(data);
        rec.challenge_sent = Some(now);
        Frame::PathChallenge { data }
    }

    /// Opens a path on the lowest unused peer CID and returns its id and the
    /// PATH_CHALLENGE to send on it.
    pub fn start_path_validation(
        &mut self,
        cids: &mut CidRegistry,
        handshake_complete: bool,
        now: SimTime,
    ) -> Result<(u64, Frame), PathError> {
        if !handshake_complete {
            return Err(PathError::HandshakeIncomplete);
        }
        let seq = cids.first_unused().ok_or(PathError::NoUnusedCid)?;
        cids.mark_used(seq);
        Ok((seq, self.challenge(seq, now)))
    }

    /// Re-sends the challenge of a path still probing (after a loss).
    pub fn repeat_challenge(&mut self, path_id: u64, now: SimTime) -> Option<Frame> {
        let rec = self.paths.get_mut(&path_id)?;
        if rec.state != PathState::Probing {
            return None;
        }
        rec.challenge_sent = Some(now);
        rec.challenge.map(|data| Frame::PathChallenge { data })
    }

    /// Handles a path validation frame received on `path_id`. A challenge
    /// on a path this endpoint has not probed yet is answered with a
    /// response plus a challenge of its own.
    pub fn on_path_frame(&mut self, frame: &Frame, path_id: u64, now: SimTime) -> PathFrameOutcome {
        let mut out = PathFrameOutcome::default();
        match *frame {
            Frame::PathChallenge { data } => {
                out.replies.push(Frame::PathResponse { data });
                if self.state(path_id) == PathState::Unused {
                    out.replies.push(self.challenge(path_id, now));
                }
            }
            Frame::PathResponse { data } => {
                if let Some(rec) = self.paths.get_mut(&path_id) {
                    if rec.state == PathState::Probing && rec.challenge == Some(data) {
                        rec.state = PathState::Validated;
                        out.validated = true;
                        out.rtt = rec.challenge_sent.map(|t| now - t);
                    }
                }
            }
            _ => {}
        }
        out
    }
}
