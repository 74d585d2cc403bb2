//! Minimal NPY reader/writer for little-endian `float32` C-order arrays.
//!
//! The format is described at
//! <https://numpy.org/devdocs/reference/generated/numpy.lib.format.html>.
//! Version 1.0 is written; 1.0 and 2.0 are read.

use crate::error::FlowMapError;

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

fn format_shape(shape: &[usize]) -> String {
    match shape {
        [single] => format!("({single},)"),
        dims => {
            let inner: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
            format!("({})", inner.join(", "))
        }
    }
}

/// Serializes `data` with the given shape as an NPY v1.0 document.
pub fn encode_f32(shape: &[usize], data: &[f32]) -> Result<Vec<u8>, FlowMapError> {
    let count: usize = shape.iter().product();
    if count != data.len() {
        return Err(FlowMapError::Format(format!(
            "shape {shape:?} holds {count} elements but {} were given",
            data.len()
        )));
    }
    let mut dict = format!(
        "{{'descr': '<f4', 'fortran_order': False, 'shape': {}, }}",
        format_shape(shape)
    );
    // magic(6) + version(2) + header_len(2) + dict + '\n' padded to ALIGN
    let unpadded = 10 + dict.len() + 1;
    let padding = (ALIGN - unpadded % ALIGN) % ALIGN;
    dict.extend(std::iter::repeat_n(' ', padding));
    dict.push('\n');
    let header_len = u16::try_from(dict.len())
        .map_err(|_| FlowMapError::Format("header too long for NPY v1.0".into()))?;

    let mut out = Vec::with_capacity(10 + dict.len() + data.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn dict_value<'a>(dict: &'a str, key: &str) -> Result<&'a str, FlowMapError> {
    let pattern = format!("'{key}':");
    let start = dict
        .find(&pattern)
        .ok_or_else(|| FlowMapError::Format(format!("header lacks `{key}`")))?
        + pattern.len();
    Ok(dict[start..].trim_start())
}

fn parse_shape(dict: &str) -> Result<Vec<usize>, FlowMapError> {
    let rest = dict_value(dict, "shape")?;
    let body = rest
        .strip_prefix('(')
        .and_then(|r| r.split_once(')'))
        .map(|(inside, _)| inside)
        .ok_or_else(|| FlowMapError::Format("shape is not a tuple".into()))?;
    body.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| FlowMapError::Format(format!("bad shape entry {s:?}"))))
        .collect()
}

/// Parses an NPY document holding `<f4` data.
pub fn decode_f32(bytes: &[u8]) -> Result<(Vec<usize>, Vec<f32>), FlowMapError> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(FlowMapError::Format("missing NPY magic".into()));
    }
    let (header_len, offset) = match bytes[6] {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 if bytes.len() >= 12 => {
            (u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize, 12)
        }
        v => return Err(FlowMapError::Format(format!("unsupported NPY version {v}"))),
    };
    let dict_bytes = bytes
        .get(offset..offset + header_len)
        .ok_or_else(|| FlowMapError::Format("truncated header".into()))?;
    let dict = std::str::from_utf8(dict_bytes)
        .map_err(|_| FlowMapError::Format("header is not valid text".into()))?;

    let descr = dict_value(dict, "descr")?;
    if !(descr.starts_with("'<f4'") || descr.starts_with("\"<f4\"")) {
        return Err(FlowMapError::Format(format!(
            "unsupported dtype {}",
            descr.split(',').next().unwrap_or(descr)
        )));
    }
    if dict_value(dict, "fortran_order")?.starts_with("True") {
        return Err(FlowMapError::Format("Fortran-ordered arrays are not supported".into()));
    }
    let shape = parse_shape(dict)?;

    let payload = &bytes[offset + header_len..];
    let count: usize = shape.iter().product();
    if payload.len() != count * 4 {
        return Err(FlowMapError::Format(format!(
            "header declares {count} elements but payload holds {} bytes",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((shape, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_aligned_and_parsable() {
        let bytes = encode_f32(&[2, 3, 3], &[0.5; 18]).unwrap();
        let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        assert_eq!((10 + header_len) % 64, 0);
        assert_eq!(bytes[10 + header_len - 1], b'\n');
        let (shape, data) = decode_f32(&bytes).unwrap();
        assert_eq!(shape, vec![2, 3, 3]);
        assert_eq!(data, vec![0.5; 18]);
    }

    #[test]
    fn one_dimensional_shape_has_trailing_comma() {
        let bytes = encode_f32(&[4], &[1.0; 4]).unwrap();
        let text = String::from_utf8_lossy(&bytes[10..]);
        assert!(text.contains("'shape': (4,)"));
        assert_eq!(decode_f32(&bytes).unwrap().0, vec![4]);
    }

    #[test]
    fn element_count_mismatch_rejected() {
        let mut bytes = encode_f32(&[2, 2, 3], &[0.0; 12]).unwrap();
        bytes.truncate(bytes.len() - 4);
        assert!(matches!(decode_f32(&bytes), Err(FlowMapError::Format(_))));
    }

    #[test]
    fn wrong_dtype_rejected() {
        let mut bytes = encode_f32(&[3], &[0.0; 3]).unwrap();
        let pos = bytes.windows(3).position(|w| w == b"<f4").unwrap();
        bytes[pos + 2] = b'8';
        assert!(decode_f32(&bytes).is_err());
    }

    #[test]
    fn bad_magic_rejected() {
        assert!(decode_f32(b"NOTNUMPY\x00\x00").is_err());
    }
}
