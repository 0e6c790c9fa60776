//! Binary PPM (P6) output and atomic file writes.

use std::io::Write;
use std::path::Path;

use crate::escape::{Classification, Mask, PixelStatus};

pub const WHITE: [u8; 3] = [255, 255, 255];
pub const BLACK: [u8; 3] = [0, 0, 0];
pub const GRAY: [u8; 3] = [128, 128, 128];

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// Palette: escaping white, non-escaping black, indeterminate gray. Julia
/// overlay pixels get full red and halved green and blue.
pub fn render(c: &Classification, overlay: Option<&Mask>) -> Vec<u8> {
    let (w, h) = (c.grid.nx, c.grid.ny);
    let header = format!("P6\n{w} {h}\n255\n");
    let mut out = Vec::with_capacity(header.len() + 3 * w * h);
    out.extend_from_slice(header.as_bytes());
    for j in 0..h {
        for i in 0..w {
            let mut px = match c.status(i, j) {
                PixelStatus::EscapingAllWords => WHITE,
                PixelStatus::NonEscapingWitness(_) => BLACK,
                PixelStatus::Indeterminate => GRAY,
            };
            if overlay.is_some_and(|m| m.get(i, j)) {
                px = [255, px[1] / 2, px[2] / 2];
            }
            out.extend_from_slice(&px);
        }
    }
    out
}
