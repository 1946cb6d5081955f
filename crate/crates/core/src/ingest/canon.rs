use std::fmt;

use serde::{Deserialize, Serialize};
use url::Url;

use super::IngestError;

/// Normalized URL under which every capture of one page is grouped.
///
/// The scheme is dropped for http/https, so `https://Example.org/` and
/// `http://example.org` share the key `example.org`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalUrl(String);

impl CanonicalUrl {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Host part (without port) of the canonical form.
    pub fn host(&self) -> &str {
        let rest = match self.0.find("://") {
            Some(i) => &self.0[i + 3..],
            None => &self.0,
        };
        let end = rest.find(['/', '?']).unwrap_or(rest.len());
        let authority = &rest[..end];
        let authority = authority.rsplit('@').next().unwrap_or(authority);
        match authority.rfind(':') {
            Some(i) if !authority.ends_with(']') => &authority[..i],
            _ => authority,
        }
    }

    /// True when the host equals `suffix` or ends with `.suffix`.
    pub fn host_has_suffix(&self, suffix: &str) -> bool {
        let suffix = suffix.trim().trim_start_matches('.').to_ascii_lowercase();
        if suffix.is_empty() {
            return true;
        }
        let host = self.host();
        host == suffix || host.ends_with(&format!(".{suffix}"))
    }
}

impl fmt::Display for CanonicalUrl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn canonicalize_url(input: &str) -> Result<CanonicalUrl, IngestError> {
    let trimmed = input.trim();
    if trimmed.is_empty() {
        return Err(IngestError::InvalidUrl(input.to_string()));
    }
    let with_scheme = if trimmed.contains("://") {
        trimmed.to_string()
    } else {
        format!("http://{trimmed}")
    };
    let url = Url::parse(&with_scheme).map_err(|_| IngestError::InvalidUrl(input.to_string()))?;
    let host = url
        .host_str()
        .filter(|h| !h.is_empty())
        .ok_or_else(|| IngestError::InvalidUrl(input.to_string()))?
        .to_ascii_lowercase();

    let web = matches!(url.scheme(), "http" | "https");
    let mut out = String::with_capacity(with_scheme.len());
    if !web {
        out.push_str(url.scheme());
        out.push_str("://");
    }
    if !url.username().is_empty() {
        out.push_str(url.username());
        if let Some(pw) = url.password() {
            out.push(':');
            out.push_str(pw);
        }
        out.push('@');
    }
    out.push_str(&host);
    if let Some(port) = url.port() {
        // http/https collapse, so either default port is dropped
        if !(web && (port == 80 || port == 443)) {
            out.push(':');
            out.push_str(&port.to_string());
        }
    }

    let path = normalize_escapes(url.path());
    if path != "/" {
        out.push_str(&path);
    }

    if let Some(query) = url.query() {
        let mut params: Vec<(String, String)> = query
            .split('&')
            .filter(|p| !p.is_empty())
            .map(|p| {
                let p = normalize_escapes(p);
                match p.find('=') {
                    Some(i) => (p[..i].to_string(), p.to_string()),
                    None => (p.clone(), p),
                }
            })
            .collect();
        params.sort_by(|a, b| a.0.cmp(&b.0));
        if !params.is_empty() {
            out.push('?');
            let joined: Vec<&str> = params.iter().map(|(_, p)| p.as_str()).collect();
            out.push_str(&joined.join("&"));
        }
    }
    Ok(CanonicalUrl(out))
}

fn is_unreserved(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~')
}

/// Decodes percent-escapes of unreserved characters and upper-cases the rest.
fn normalize_escapes(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%'
            && i + 2 < bytes.len()
            && bytes[i + 1].is_ascii_hexdigit()
            && bytes[i + 2].is_ascii_hexdigit()
        {
            let hex = &s[i + 1..i + 3];
            if let Ok(v) = u8::from_str_radix(hex, 16) {
                if is_unreserved(v) {
                    out.push(v);
                } else {
                    out.push(b'%');
                    out.extend(hex.to_ascii_uppercase().bytes());
                }
                i += 3;
                continue;
            }
        }
        out.push(bytes[i]);
        i += 1;
    }
    String::from_utf8(out).expect("only ASCII bytes are substituted")
}
