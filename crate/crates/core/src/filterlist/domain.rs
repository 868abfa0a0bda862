// Snapshot of common multi-label public suffixes. Hosts under any other
// suffix use their last label as the public suffix.
const MULTI_LABEL_SUFFIXES: &[&str] = &[
    "ac.at", "co.at", "gv.at", "or.at", "ac.uk", "co.uk", "gov.uk", "ltd.uk", "me.uk", "net.uk",
    "org.uk", "plc.uk", "com.au", "net.au", "org.au", "edu.au", "gov.au", "co.nz", "net.nz",
    "org.nz", "co.jp", "ne.jp", "or.jp", "ac.jp", "go.jp", "co.kr", "or.kr", "com.br", "net.br",
    "org.br", "com.cn", "net.cn", "org.cn", "gov.cn", "com.tw", "com.hk", "com.sg", "com.my",
    "co.in", "net.in", "org.in", "co.za", "org.za", "com.mx", "com.ar", "com.tr", "com.ua",
    "co.il", "com.pl", "net.pl", "org.pl", "co.id", "com.ph", "com.vn", "com.eg", "com.sa",
    "github.io", "blogspot.com", "appspot.com", "herokuapp.com", "cloudfront.net",
];

fn is_ip_literal(host: &str) -> bool {
    host.parse::<std::net::IpAddr>().is_ok()
        || (host.starts_with('[') && host.ends_with(']'))
}

/// Registrable domain (public suffix plus one label) of a hostname. IP
/// literals and single-label hosts are returned unchanged.
pub fn registrable_domain(host: &str) -> String {
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    if is_ip_literal(&host) {
        return host;
    }
    let labels: Vec<&str> = host.split('.').collect();
    if labels.len() < 2 {
        return host;
    }
    let suffix_labels = MULTI_LABEL_SUFFIXES
        .iter()
        .filter(|s| host == **s || host.ends_with(&format!(".{s}")))
        .map(|s| s.split('.').count())
        .max()
        .unwrap_or(1);
    if labels.len() <= suffix_labels {
        return host;
    }
    labels[labels.len() - suffix_labels - 1..].join(".")
}
