//! Binary portable greymap (`P5`) output for frame dumps.

use std::io::{self, Write};

use super::Frame;

pub fn write_pgm<W: Write>(frame: &Frame, mut out: W) -> io::Result<()> {
    write!(
        out,
        "P5\n# swarmdisc frame v{}\n{} {}\n255\n",
        env!("CARGO_PKG_VERSION"),
        frame.width,
        frame.height
    )?;
    out.write_all(&frame.pixels)?;
    out.flush()
}
