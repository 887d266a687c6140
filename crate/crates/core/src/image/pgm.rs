//! Binary PGM (`P5`, 8-bit) reading and writing.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::ImageGray;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed PGM: {0}")]
    Format(String),
}

pub fn decode(bytes: &[u8]) -> Result<ImageGray, PgmError> {
    let mut pos = 0usize;
    let mut next_token = || -> Result<String, PgmError> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(PgmError::Format("truncated header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = next_token()?;
    if magic != "P5" {
        return Err(PgmError::Format(format!("unsupported magic {magic:?}")));
    }
    let mut num = |what: &str| -> Result<u32, PgmError> {
        next_token()?
            .parse::<u32>()
            .map_err(|_| PgmError::Format(format!("bad {what}")))
    };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(PgmError::Format(format!(
            "only 8-bit PGM is supported (maxval {maxval})"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    let data_start = pos + 1;
    let expected = width as usize * height as usize;
    if bytes.len() < data_start + expected {
        return Err(PgmError::Format("truncated raster".into()));
    }
    let data = bytes[data_start..data_start + expected].to_vec();
    ImageGray::new(width, height, data).map_err(|e| PgmError::Format(e.to_string()))
}

pub fn encode(img: &ImageGray) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.as_raw());
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<ImageGray, PgmError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| PgmError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(&bytes)
}

pub fn write_pgm(path: impl AsRef<Path>, img: &ImageGray) -> Result<(), PgmError> {
    let path = path.as_ref();
    fs::write(path, encode(img)).map_err(|source| PgmError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_comment() {
        let img = ImageGray::from_fn(7, 3, |x, y| (x * 31 + y * 7) as u8);
        let mut bytes = b"P5\n# made by hand\n7 3\n255\n".to_vec();
        bytes.extend_from_slice(img.as_raw());
        assert_eq!(decode(&bytes).unwrap(), img);
        assert_eq!(decode(&encode(&img)).unwrap(), img);
    }

    #[test]
    fn rejects_ascii_and_truncation() {
        assert!(decode(b"P2\n1 1\n255\n0").is_err());
        assert!(decode(b"P5\n4 4\n255\n\x00\x01").is_err());
    }
}
