use std::fmt;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::TcpStream;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::protocol::{self, StackShape, MAGIC, REPLY_LEN, VERSION};
use super::vector::{Backend, BehaviorVector};
use crate::capture::FrameStack;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Largest embedding dimension a handshake may announce.
pub const MAX_DIM: u32 = 1 << 20;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding transport failed: {0}")]
    Transport(#[source] io::Error),
    #[error("embedding server closed the session")]
    Closed,
    #[error("handshake mismatch: {0}")]
    Handshake(String),
    #[error("response id {got} does not match request id {expected}")]
    IdMismatch { expected: u64, got: u64 },
    #[error("no response within {0:?}")]
    Timeout(Duration),
    #[error("stack is {got:?} but the session was opened for {expected:?}")]
    Shape { expected: StackShape, got: StackShape },
    #[error("embedding component {index} is not finite")]
    NonFinite { index: usize },
    #[error("stack {width}x{height} does not fit the protocol's u16 dimensions")]
    StackTooLarge { width: usize, height: usize },
    #[error("invalid endpoint '{0}'")]
    BadEndpoint(String),
    #[error("embedding dimension changed from {expected} to {got}")]
    Dimension { expected: usize, got: usize },
}

/// Where the encoder server lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EndpointSpec {
    /// Spawn a program and talk over its stdin and stdout.
    Command { program: String, args: Vec<String> },
    Tcp(String),
}

impl FromStr for EndpointSpec {
    type Err = EmbedError;

    /// `tcp://host:port`, or a whitespace-separated command line.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(addr) = s.strip_prefix("tcp://") {
            if addr.is_empty() || !addr.contains(':') {
                return Err(EmbedError::BadEndpoint(s.to_string()));
            }
            return Ok(EndpointSpec::Tcp(addr.to_string()));
        }
        let mut words = s.split_whitespace().map(str::to_string);
        let program = words.next().ok_or_else(|| EmbedError::BadEndpoint(s.to_string()))?;
        Ok(EndpointSpec::Command {
            program,
            args: words.collect(),
        })
    }
}

impl fmt::Display for EndpointSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EndpointSpec::Tcp(addr) => write!(f, "tcp://{addr}"),
            EndpointSpec::Command { program, args } => {
                f.write_str(program)?;
                for a in args {
                    write!(f, " {a}")?;
                }
                Ok(())
            }
        }
    }
}

enum Message {
    Hello([u8; REPLY_LEN]),
    Response(u64, Vec<f32>),
    Failed(io::Error),
    Eof,
}

/// One sequential request/response session with an encoder server.
pub struct EmbeddingClient {
    writer: Option<Box<dyn Write + Send>>,
    inbox: Receiver<Message>,
    child: Option<Child>,
    socket: Option<TcpStream>,
    shape: StackShape,
    dim: usize,
    next_id: u64,
    timeout: Duration,
}

impl fmt::Debug for EmbeddingClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddingClient")
            .field("shape", &self.shape)
            .field("dim", &self.dim)
            .field("next_id", &self.next_id)
            .finish()
    }
}

impl EmbeddingClient {
    pub fn connect(spec: &EndpointSpec, shape: StackShape, timeout: Duration) -> Result<Self, EmbedError> {
        match spec {
            EndpointSpec::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(EmbedError::Transport)?;
                stream.set_nodelay(true).map_err(EmbedError::Transport)?;
                let reader = stream.try_clone().map_err(EmbedError::Transport)?;
                let handle = stream.try_clone().map_err(EmbedError::Transport)?;
                let mut client = Self::handshake(Box::new(BufWriter::new(stream)), reader, None, shape, timeout);
                if let Ok(c) = &mut client {
                    c.socket = Some(handle);
                }
                client
            }
            EndpointSpec::Command { program, args } => {
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(EmbedError::Transport)?;
                let stdin: ChildStdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Self::handshake(Box::new(BufWriter::new(stdin)), stdout, Some(child), shape, timeout)
            }
        }
    }

    /// Runs the handshake over an arbitrary byte stream pair.
    pub fn over<R, W>(reader: R, writer: W, shape: StackShape, timeout: Duration) -> Result<Self, EmbedError>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        Self::handshake(Box::new(writer), reader, None, shape, timeout)
    }

    fn handshake<R: Read + Send + 'static>(
        mut writer: Box<dyn Write + Send>,
        reader: R,
        child: Option<Child>,
        shape: StackShape,
        timeout: Duration,
    ) -> Result<Self, EmbedError> {
        let (tx, inbox) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(reader);
            let mut hello = [0u8; REPLY_LEN];
            match protocol::read_exact_or_eof(&mut reader, &mut hello) {
                Ok(true) => {
                    let reply = protocol::decode_reply(&hello);
                    let usable = reply.magic == MAGIC && reply.version == VERSION && (1..=MAX_DIM).contains(&reply.dim);
                    if tx.send(Message::Hello(hello)).is_err() || !usable {
                        return;
                    }
                    let dim = reply.dim as usize;
                    loop {
                        let msg = match protocol::read_response(&mut reader, dim) {
                            Ok(Some((id, v))) => Message::Response(id, v),
                            Ok(None) => Message::Eof,
                            Err(e) => Message::Failed(e),
                        };
                        let stop = !matches!(msg, Message::Response(..));
                        if tx.send(msg).is_err() || stop {
                            return;
                        }
                    }
                }
                Ok(false) => {
                    let _ = tx.send(Message::Eof);
                }
                Err(e) => {
                    let _ = tx.send(Message::Failed(e));
                }
            }
        });
        let mut client = Self {
            writer: None,
            inbox,
            child,
            socket: None,
            shape,
            dim: 0,
            next_id: 0,
            timeout,
        };
        writer
            .write_all(&protocol::encode_hello(shape))
            .and_then(|_| writer.flush())
            .map_err(EmbedError::Transport)?;
        client.writer = Some(writer);
        let reply = match client.receive()? {
            Message::Hello(b) => protocol::decode_reply(&b),
            _ => unreachable!("the reader sends the handshake first"),
        };
        if reply.magic != MAGIC {
            return Err(EmbedError::Handshake(format!("bad magic {:?}", reply.magic)));
        }
        if reply.version != VERSION {
            return Err(EmbedError::Handshake(format!("server speaks version {}", reply.version)));
        }
        if reply.dim == 0 {
            return Err(EmbedError::Handshake(format!("server refused input shape {shape:?}")));
        }
        if reply.dim > MAX_DIM {
            return Err(EmbedError::Handshake(format!("implausible embedding dimension {}", reply.dim)));
        }
        client.dim = reply.dim as usize;
        Ok(client)
    }

    fn receive(&mut self) -> Result<Message, EmbedError> {
        match self.inbox.recv_timeout(self.timeout) {
            Ok(Message::Failed(e)) if e.kind() == io::ErrorKind::UnexpectedEof => Err(EmbedError::Closed),
            Ok(Message::Failed(e)) => Err(EmbedError::Transport(e)),
            Ok(Message::Eof) | Err(RecvTimeoutError::Disconnected) => Err(EmbedError::Closed),
            Ok(m) => Ok(m),
            Err(RecvTimeoutError::Timeout) => Err(EmbedError::Timeout(self.timeout)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> StackShape {
        self.shape
    }

    /// Id the next request will carry.
    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    /// Sends one raw stack and waits for its embedding.
    pub fn embed_raw(&mut self, shape: StackShape, pixels: &[u8]) -> Result<Vec<f32>, EmbedError> {
        if shape != self.shape || pixels.len() != self.shape.bytes() {
            return Err(EmbedError::Shape {
                expected: self.shape,
                got: shape,
            });
        }
        let id = self.next_id;
        self.next_id += 1;
        let writer = self.writer.as_mut().ok_or(EmbedError::Closed)?;
        protocol::write_request(writer, id, pixels).map_err(|e| match e.kind() {
            io::ErrorKind::BrokenPipe => EmbedError::Closed,
            _ => EmbedError::Transport(e),
        })?;
        let start = Instant::now();
        match self.receive()? {
            Message::Response(got, values) => {
                log::trace!("embedding {id} in {:?}", start.elapsed());
                if got != id {
                    return Err(EmbedError::IdMismatch { expected: id, got });
                }
                if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                    return Err(EmbedError::NonFinite { index });
                }
                Ok(values)
            }
            _ => Err(EmbedError::Closed),
        }
    }

    pub fn embed(&mut self, stack: &FrameStack) -> Result<BehaviorVector, EmbedError> {
        let shape = stack_shape(stack)?;
        let values = self.embed_raw(shape, &stack.to_bytes())?;
        Ok(BehaviorVector::new(
            Backend::Learned,
            values.into_iter().map(f64::from).collect(),
        ))
    }
}

impl Drop for EmbeddingClient {
    fn drop(&mut self) {
        // closing the write side ends the server's session
        self.writer = None;
        if let Some(socket) = self.socket.take() {
            let _ = socket.shutdown(std::net::Shutdown::Both);
        }
        if let Some(mut child) = self.child.take() {
            let deadline = Instant::now() + Duration::from_secs(2);
            while Instant::now() < deadline {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

pub fn stack_shape(stack: &FrameStack) -> Result<StackShape, EmbedError> {
    let too_big = || EmbedError::StackTooLarge {
        width: stack.width(),
        height: stack.height(),
    };
    Ok(StackShape::new(
        crate::capture::STACK_CHANNELS as u8,
        u16::try_from(stack.height()).map_err(|_| too_big())?,
        u16::try_from(stack.width()).map_err(|_| too_big())?,
    ))
}

/// `learned_embed` as a free function.
pub fn learned_embed(stack: &FrameStack, client: &mut EmbeddingClient) -> Result<BehaviorVector, EmbedError> {
    client.embed(stack)
}

/// Several sessions to the same endpoint, used to embed batches in parallel.
#[derive(Debug)]
pub struct SessionPool {
    sessions: Vec<EmbeddingClient>,
}

impl SessionPool {
    pub fn connect(spec: &EndpointSpec, shape: StackShape, sessions: usize, timeout: Duration) -> Result<Self, EmbedError> {
        let sessions = (0..sessions.max(1))
            .map(|_| EmbeddingClient::connect(spec, shape, timeout))
            .collect::<Result<Vec<_>, _>>()?;
        let dim = sessions[0].dim();
        if let Some(s) = sessions.iter().find(|s| s.dim() != dim) {
            return Err(EmbedError::Dimension { expected: dim, got: s.dim() });
        }
        Ok(Self { sessions })
    }

    pub fn from_sessions(sessions: Vec<EmbeddingClient>) -> Self {
        assert!(!sessions.is_empty(), "a pool needs at least one session");
        Self { sessions }
    }

    pub fn dim(&self) -> usize {
        self.sessions[0].dim()
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    /// Embeds every stack, splitting the batch into one contiguous chunk per
    /// session. Output order matches input order. On failure the error of the
    /// lowest failing index is returned along with that index.
    pub fn embed_all(&mut self, stacks: &[FrameStack]) -> Result<Vec<BehaviorVector>, (usize, EmbedError)> {
        if stacks.is_empty() {
            return Ok(Vec::new());
        }
        let chunk = stacks.len().div_ceil(self.sessions.len());
        let results: Vec<Result<Vec<BehaviorVector>, (usize, EmbedError)>> = thread::scope(|scope| {
            let handles: Vec<_> = self
                .sessions
                .iter_mut()
                .zip(stacks.chunks(chunk).enumerate())
                .map(|(session, (c, part))| {
                    scope.spawn(move || {
                        part.iter()
                            .enumerate()
                            .map(|(i, s)| session.embed(s).map_err(|e| (c * chunk + i, e)))
                            .collect()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("embedding thread panicked")).collect()
        });
        let mut out = Vec::with_capacity(stacks.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_parsing() {
        assert_eq!("tcp://127.0.0.1:9000".parse::<EndpointSpec>().unwrap(), EndpointSpec::Tcp("127.0.0.1:9000".into()));
        assert_eq!(
            "python -m enc --ckpt a.pt".parse::<EndpointSpec>().unwrap(),
            EndpointSpec::Command {
                program: "python".into(),
                args: vec!["-m".into(), "enc".into(), "--ckpt".into(), "a.pt".into()]
            }
        );
        assert!("".parse::<EndpointSpec>().is_err());
        assert!("tcp://".parse::<EndpointSpec>().is_err());
        let spec: EndpointSpec = "srv --dim 8".parse().unwrap();
        assert_eq!(spec.to_string(), "srv --dim 8");
    }
}
