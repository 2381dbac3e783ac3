//! Newline-delimited JSON protocol between a planner and an external
//! controller.
//!
//! The planner side opens with a greeting, then sends one step message per
//! control step and blocks for an action. After the search stops it sends a
//! final step message with `done = true` and closes.

use std::io::{self, BufRead, BufReader, BufWriter, ErrorKind, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dac::{build_policy, feature_len, ControlPolicy, DacError, FeatureDiff, FeatureVector, Finish, Observation, PolicySpec};
use crate::heuristics::Portfolio;
use crate::search::{Budget, GbfsSearch, SearchError, SearchResult};
use crate::task::Task;

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Policy(#[from] DacError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Greeting {
    pub proto: u32,
    pub n: usize,
    pub feature_len: usize,
}

/// Planner to controller. `features` is the feature diff the policy acts on;
/// `raw` carries the absolute features of the same step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMessage {
    pub t: u64,
    pub features: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<Vec<f64>>,
}

/// Controller to planner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMessage {
    pub h: usize,
}

/// One JSON object per line over a buffered stream.
struct Wire {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    line: String,
}

impl Wire {
    fn new(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        Ok(Self { reader: BufReader::new(stream.try_clone()?), writer: BufWriter::new(stream), line: String::new() })
    }

    fn send<M: Serialize>(&mut self, msg: &M) -> io::Result<()> {
        serde_json::to_writer(&mut self.writer, msg)?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()
    }

    /// `Ok(None)` on a clean end of stream.
    fn recv<M: for<'de> Deserialize<'de>>(&mut self) -> Result<Option<M>, RecvError> {
        self.line.clear();
        if self.reader.read_line(&mut self.line)? == 0 {
            return Ok(None);
        }
        serde_json::from_str(self.line.trim_end()).map(Some).map_err(|e| RecvError::Malformed(e.to_string()))
    }
}

enum RecvError {
    Io(io::Error),
    Malformed(String),
}

impl From<io::Error> for RecvError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

fn io_to_dac(e: io::Error) -> DacError {
    match e.kind() {
        ErrorKind::WouldBlock | ErrorKind::TimedOut => DacError::Timeout,
        _ => DacError::Disconnected(e.to_string()),
    }
}

/// Planner-side policy that forwards every decision to a controller.
pub struct RemotePolicy {
    wire: Wire,
    last_t: Option<u64>,
}

impl RemotePolicy {
    /// Wraps an established connection and sends the greeting.
    pub fn from_stream(stream: TcpStream, n: usize, timeout: Option<Duration>) -> Result<Self, DacError> {
        stream.set_read_timeout(timeout).map_err(io_to_dac)?;
        let mut wire = Wire::new(stream).map_err(io_to_dac)?;
        wire.send(&Greeting { proto: PROTOCOL_VERSION, n, feature_len: feature_len(n) }).map_err(io_to_dac)?;
        Ok(Self { wire, last_t: None })
    }

    /// Connects to a controller that is listening at `addr`.
    pub fn connect(addr: &str, n: usize) -> Result<Self, DacError> {
        Self::connect_with_timeout(addr, n, DEFAULT_TIMEOUT)
    }

    pub fn connect_with_timeout(addr: &str, n: usize, timeout: Duration) -> Result<Self, DacError> {
        let addrs: Vec<_> = addr
            .to_socket_addrs()
            .map_err(|e| DacError::Disconnected(format!("cannot resolve {addr}: {e}")))?
            .collect();
        let stream = TcpStream::connect(&addrs[..]).map_err(|e| DacError::Disconnected(format!("{addr}: {e}")))?;
        Self::from_stream(stream, n, Some(timeout))
    }
}

impl ControlPolicy for RemotePolicy {
    fn select(&mut self, obs: &Observation<'_>) -> Result<usize, DacError> {
        let msg = StepMessage {
            t: obs.t,
            features: obs.diff.0.clone(),
            reward: if obs.t == 0 { 0.0 } else { crate::dac::step_reward() },
            done: false,
            outcome: None,
            raw: Some(obs.features.to_vec()),
        };
        self.wire.send(&msg).map_err(io_to_dac)?;
        self.last_t = Some(obs.t);
        match self.wire.recv::<ActionMessage>() {
            Ok(Some(a)) => Ok(a.h),
            Ok(None) => Err(DacError::Disconnected("controller closed the connection".into())),
            Err(RecvError::Io(e)) => Err(io_to_dac(e)),
            Err(RecvError::Malformed(m)) => Err(DacError::Protocol(m)),
        }
    }

    fn finish(&mut self, fin: &Finish<'_>) -> Result<(), DacError> {
        // the final message follows the last decision even when no expansion happened
        let t = match self.last_t {
            Some(last) if last >= fin.t => last + 1,
            _ => fin.t,
        };
        let msg = StepMessage {
            t,
            features: fin.diff.0.clone(),
            reward: if fin.goal_popped { 0.0 } else { crate::dac::step_reward() },
            done: true,
            outcome: Some(fin.outcome.to_string()),
            raw: Some(fin.features.to_vec()),
        };
        self.wire.send(&msg).map_err(io_to_dac)?;
        let _ = self.wire.writer.get_ref().shutdown(std::net::Shutdown::Write);
        Ok(())
    }
}

/// Accepts one controller on `listener` and runs the search under its
/// control.
pub fn serve_search_on<T: Task + ?Sized>(
    task: &T,
    portfolio: &Portfolio<T>,
    listener: &TcpListener,
    budget: Budget,
    timeout: Option<Duration>,
) -> Result<SearchResult, BridgeError> {
    let (stream, _) = listener.accept()?;
    let mut policy = RemotePolicy::from_stream(stream, portfolio.len(), timeout)?;
    Ok(GbfsSearch::new(task, portfolio, budget)?.run(&mut policy)?)
}

/// Binds `addr` and serves a single search; see [`serve_search_on`].
pub fn serve_search<T: Task + ?Sized>(
    task: &T,
    portfolio: &Portfolio<T>,
    addr: &str,
    budget: Budget,
) -> Result<SearchResult, BridgeError> {
    let listener = TcpListener::bind(addr)?;
    serve_search_on(task, portfolio, &listener, budget, Some(DEFAULT_TIMEOUT))
}

/// What the controller saw during one session.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerReport {
    pub n: usize,
    pub steps: u64,
    pub choices: Vec<usize>,
    pub outcome: Option<String>,
    /// `(t, diff)` of every step message, final message included.
    pub received: Vec<(u64, Vec<f64>)>,
}

/// Drives a planner from the controller side until the final message.
/// `make_policy` receives the portfolio size from the greeting.
pub fn run_controller<F>(stream: TcpStream, make_policy: F) -> Result<ControllerReport, BridgeError>
where
    F: FnOnce(usize) -> Result<Box<dyn ControlPolicy>, DacError>,
{
    let mut wire = Wire::new(stream)?;
    let recv_err = |e: RecvError| match e {
        RecvError::Io(e) => BridgeError::Io(e),
        RecvError::Malformed(m) => BridgeError::Protocol(m),
    };
    let greeting: Greeting = wire.recv().map_err(recv_err)?.ok_or_else(|| BridgeError::Protocol("no greeting".into()))?;
    if greeting.proto != PROTOCOL_VERSION || greeting.feature_len != feature_len(greeting.n) {
        return Err(BridgeError::Protocol(format!("unsupported greeting {greeting:?}")));
    }
    let mut policy = make_policy(greeting.n)?;
    let mut report =
        ControllerReport { n: greeting.n, steps: 0, choices: Vec::new(), outcome: None, received: Vec::new() };
    while let Some(msg) = wire.recv::<StepMessage>().map_err(recv_err)? {
        if msg.features.len() != greeting.feature_len {
            return Err(BridgeError::Protocol(format!("step {} has {} features", msg.t, msg.features.len())));
        }
        let diff = FeatureDiff(msg.features.clone());
        let features = match &msg.raw {
            Some(raw) => FeatureVector::from_slice(raw)?,
            // without absolute features the diff is the best available view
            None => FeatureVector::from_slice(&msg.features)?,
        };
        report.received.push((msg.t, msg.features));
        if msg.done {
            let outcome = msg.outcome.unwrap_or_default();
            policy.finish(&Finish { t: msg.t, features: &features, diff: &diff, outcome: &outcome, goal_popped: msg.reward == 0.0 })?;
            report.outcome = Some(outcome);
            return Ok(report);
        }
        let h = policy.select(&Observation { t: msg.t, features: &features, diff: &diff })?;
        report.choices.push(h);
        report.steps += 1;
        wire.send(&ActionMessage { h })?;
    }
    Ok(report)
}

/// Connects to a serving planner and controls it with the policy `spec`.
pub fn control_planner(addr: &str, spec: &PolicySpec) -> Result<ControllerReport, BridgeError> {
    let stream = TcpStream::connect(addr)?;
    run_controller(stream, |n| build_policy(spec, n))
}

/// Accepts planner connections on `listener` and controls each with a fresh
/// policy built from `spec`. Stops after `max_sessions` if given.
pub fn serve_controller(
    listener: &TcpListener,
    spec: &PolicySpec,
    max_sessions: Option<usize>,
) -> Result<Vec<ControllerReport>, BridgeError> {
    let mut reports = Vec::new();
    for stream in listener.incoming() {
        reports.push(run_controller(stream?, |n| build_policy(spec, n))?);
        if max_sessions.is_some_and(|m| reports.len() >= m) {
            break;
        }
    }
    Ok(reports)
}
