//! Small shared helpers: hashing, atomic file writes, and single-pass
//! placeholder substitution.

use std::fs;
use std::io;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of the input.
pub fn sha256_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes via a sibling temp file plus rename, so readers never observe a
/// partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let unique = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?
        .to_string_lossy()
        .into_owned();
    let temp = path.with_file_name(format!(".{file_name}.tmp.{}.{unique}", std::process::id()));
    fs::write(&temp, contents)?;
    match fs::rename(&temp, path) {
        Ok(()) => Ok(()),
        Err(err) => {
            let _ = fs::remove_file(&temp);
            Err(err)
        }
    }
}

/// Replaces `{{name}}` placeholders in a single left-to-right pass; emitted
/// values are never rescanned, so a value containing `{{name}}` stays
/// literal.
pub fn fill_placeholders(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while let Some(open) = rest.find("{{") {
        let after = &rest[open + 2..];
        if let Some(close) = after.find("}}") {
            let name = &after[..close];
            for (key, value) in values {
                if *key == name {
                    out.push_str(&rest[..open]);
                    out.push_str(value);
                    rest = &after[close + 2..];
                    continue 'outer;
                }
            }
        }
        // Unknown placeholder or unterminated braces: emit verbatim.
        out.push_str(&rest[..open + 2]);
        rest = &rest[open + 2..];
    }
    out.push_str(rest);
    out
}

/// How often `{{name}}` appears in `template`.
pub fn placeholder_count(template: &str, name: &str) -> usize {
    template.matches(&format!("{{{{{name}}}}}")).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(sha256_hex(b"abc").len(), 64);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("file.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        // No temp files left behind.
        let leftovers: Vec<_> = std::fs::read_dir(path.parent().unwrap())
            .unwrap()
            .filter_map(Result::ok)
            .filter(|e| e.file_name().to_string_lossy().contains(".tmp."))
            .collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn placeholders_fill_once_without_recursion() {
        let filled = fill_placeholders("T: {{transcript}}!", &[("transcript", "{{transcript}}")]);
        assert_eq!(filled, "T: {{transcript}}!");
        let multi = fill_placeholders("{{a}}-{{b}}-{{a}}", &[("a", "1"), ("b", "{{a}}")]);
        assert_eq!(multi, "1-{{a}}-1");
        let unknown = fill_placeholders("keep {{missing}} braces", &[("a", "x")]);
        assert_eq!(unknown, "keep {{missing}} braces");
    }

    #[test]
    fn placeholder_counting() {
        assert_eq!(placeholder_count("{{t}} and {{t}}", "t"), 2);
        assert_eq!(placeholder_count("none", "t"), 0);
    }
}
