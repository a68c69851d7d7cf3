//! Deterministic reference encoder server for the embedding wire protocol.
//!
//! Each channel is average-pooled onto an 8x8 grid and the pooled features
//! are mapped through a fixed Gaussian random projection. It stands in for
//! a trained encoder when exercising the learned backend.

use std::io::{self, BufReader, BufWriter};
use std::net::TcpListener;
use std::process::ExitCode;

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use swarmdisc::behavior::protocol::serve;
use swarmdisc::behavior::StackShape;

const GRID: usize = 8;

#[derive(Debug, Parser)]
#[command(name = "swarmdisc-refembed", version, about = "Reference embedding server (random projection)")]
struct Args {
    #[arg(long, default_value_t = 512)]
    dim: u32,
    /// Seed of the projection matrix.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Serve TCP on this address instead of stdin/stdout; prints the bound address.
    #[arg(long)]
    listen: Option<String>,
    /// Exit after this many TCP sessions.
    #[arg(long)]
    max_sessions: Option<usize>,
    /// On stdin/stdout, exit without replying once this many requests were served.
    #[arg(long)]
    max_requests: Option<u64>,
}

struct Projection {
    features: usize,
    weights: Vec<f32>,
}

impl Projection {
    fn new(shape: StackShape, dim: usize, seed: u64) -> Self {
        let features = usize::from(shape.channels) * GRID * GRID;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (features as f64).sqrt();
        let weights = (0..dim * features)
            .map(|_| (rng.sample::<f64, _>(StandardNormal) * scale) as f32)
            .collect();
        Self { features, weights }
    }

    fn pool(shape: StackShape, pixels: &[u8]) -> Vec<f32> {
        let (h, w) = (usize::from(shape.height), usize::from(shape.width));
        let mut sums = vec![0u64; usize::from(shape.channels) * GRID * GRID];
        let mut counts = vec![0u64; sums.len()];
        for c in 0..usize::from(shape.channels) {
            for row in 0..h {
                let gy = row * GRID / h;
                for col in 0..w {
                    let cell = (c * GRID + gy) * GRID + col * GRID / w;
                    sums[cell] += u64::from(pixels[(c * h + row) * w + col]);
                    counts[cell] += 1;
                }
            }
        }
        sums.iter()
            .zip(&counts)
            .map(|(&s, &n)| if n == 0 { 0.0 } else { s as f32 / (255.0 * n as f32) })
            .collect()
    }

    fn embed(&self, shape: StackShape, pixels: &[u8]) -> Vec<f32> {
        let x = Self::pool(shape, pixels);
        self.weights
            .chunks(self.features)
            .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

fn acceptable(shape: StackShape) -> bool {
    (1..=4).contains(&shape.channels) && shape.height >= GRID as u16 && shape.width >= GRID as u16
}

fn session<R: io::Read, W: io::Write>(
    input: R,
    output: W,
    dim: u32,
    seed: u64,
    max_requests: Option<u64>,
) -> io::Result<u64> {
    let mut projection = None;
    let mut served = 0u64;
    serve(input, output, dim, acceptable, |shape, pixels| {
        if max_requests.is_some_and(|m| served >= m) {
            std::process::exit(0);
        }
        served += 1;
        projection
            .get_or_insert_with(|| Projection::new(shape, dim as usize, seed))
            .embed(shape, pixels)
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.dim == 0 {
        eprintln!("error: --dim must be positive");
        return ExitCode::from(2);
    }
    let Some(addr) = args.listen else {
        let stdin = io::stdin();
        let stdout = io::stdout();
        return match session(BufReader::new(stdin.lock()), BufWriter::new(stdout.lock()), args.dim, args.seed, args.max_requests) {
            Ok(_) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        };
    };
    let listener = match TcpListener::bind(&addr) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot listen on {addr}: {e}");
            return ExitCode::FAILURE;
        }
    };
    match listener.local_addr() {
        Ok(a) => println!("listening on {a}"),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let mut handles = Vec::new();
    for (n, stream) in listener.incoming().enumerate() {
        match stream {
            Ok(stream) => {
                let (dim, seed) = (args.dim, args.seed);
                handles.push(std::thread::spawn(move || {
                    let reader = match stream.try_clone() {
                        Ok(s) => BufReader::new(s),
                        Err(e) => return eprintln!("session: {e}"),
                    };
                    if let Err(e) = session(reader, BufWriter::new(stream), dim, seed, None) {
                        eprintln!("session: {e}");
                    }
                }));
            }
            Err(e) => eprintln!("accept: {e}"),
        }
        if args.max_sessions.is_some_and(|m| n + 1 >= m) {
            break;
        }
    }
    for h in handles {
        let _ = h.join();
    }
    ExitCode::SUCCESS
}
