//! Parsing of compact builtin references such as `power(0.5)`,
//! `power:0.5`, `window:1:2`, `matrix:1,2,4` or `builtin:atom(1, 2)`.

use crate::error::{Error, Result};

/// Splits a reference into its name and numeric parameters.
pub fn parse_call(text: &str) -> Result<(String, Vec<f64>)> {
    let text = text.trim();
    let body = text.strip_prefix("builtin:").unwrap_or(text).trim();
    let (name, args): (&str, Vec<&str>) = if let Some(open) = body.find('(') {
        let inner = body[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| Error::InvalidArgument(format!("unbalanced parentheses in `{text}`")))?;
        let args = if inner.trim().is_empty() { Vec::new() } else { inner.split(',').collect() };
        (&body[..open], args)
    } else {
        let mut parts = body.split(':');
        let name = parts.next().unwrap_or("");
        (name, parts.flat_map(|p| p.split(',')).collect())
    };
    let name = name.trim();
    if name.is_empty() {
        return Err(Error::InvalidArgument(format!("missing name in `{text}`")));
    }
    let params = args
        .iter()
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("parameter `{}` in `{text}` is not a number", a.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((name.to_string(), params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepted_forms() {
        assert_eq!(parse_call("power(0.5)").unwrap(), ("power".into(), vec![0.5]));
        assert_eq!(parse_call("builtin:power(0.5)").unwrap(), ("power".into(), vec![0.5]));
        assert_eq!(parse_call("power:0.5").unwrap(), ("power".into(), vec![0.5]));
        assert_eq!(parse_call("window:1:2").unwrap(), ("window".into(), vec![1.0, 2.0]));
        assert_eq!(parse_call("matrix:0.1,1,4").unwrap(), ("matrix".into(), vec![0.1, 1.0, 4.0]));
        assert_eq!(parse_call("atom(1, 2)").unwrap(), ("atom".into(), vec![1.0, 2.0]));
        assert_eq!(parse_call("log-ratio").unwrap(), ("log-ratio".into(), vec![]));
        assert_eq!(parse_call("log-ratio()").unwrap(), ("log-ratio".into(), vec![]));
    }

    #[test]
    fn rejected_forms() {
        assert!(parse_call("power(0.5").is_err());
        assert!(parse_call("power(x)").is_err());
        assert!(parse_call("").is_err());
        assert!(parse_call(":1").is_err());
    }
}
