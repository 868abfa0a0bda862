use roxmltree::Document;

use super::{IngestError, SiteRecord};

pub const AWIS_ENDPOINT: &str = "https://awis.amazonaws.com/api";

/// Listing requests return at most this many entries per page.
pub const AWIS_MAX_COUNT: u32 = 20;

/// Builds the unsigned category-listing query URL. Parameters are emitted in
/// the service's canonical (alphabetical) order.
pub fn build_awis_request(
    action: &str,
    count: u32,
    start: u32,
    path: &str,
    sort_by: &str,
) -> Result<String, IngestError> {
    if !(1..=AWIS_MAX_COUNT).contains(&count) {
        return Err(IngestError::Parameter(format!(
            "count {count} outside 1..={AWIS_MAX_COUNT}"
        )));
    }
    if start == 0 {
        return Err(IngestError::Parameter("start must be >= 1".into()));
    }
    let params: [(&str, String); 8] = [
        ("Action", action.to_string()),
        ("Count", count.to_string()),
        ("Descriptions", "True".into()),
        ("Path", path.to_string()),
        ("Recursive", "False".into()),
        ("ResponseGroup", "Listings".into()),
        ("SortBy", sort_by.to_string()),
        ("Start", start.to_string()),
    ];
    let query: Vec<String> = params
        .iter()
        .map(|(k, v)| format!("{k}={}", encode_component(v)))
        .collect();
    Ok(format!("{AWIS_ENDPOINT}?{}", query.join("&")))
}

// RFC 3986 unreserved characters pass through; everything else is escaped.
fn encode_component(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for b in value.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.' | b'~') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

/// Extracts one [`SiteRecord`] per `Listing` element in document order.
/// The response status must read `Success`.
pub fn parse_awis_xml(xml: &[u8]) -> Result<Vec<SiteRecord>, IngestError> {
    let text = std::str::from_utf8(xml).map_err(|e| IngestError::Xml(e.to_string()))?;
    let doc = Document::parse(text).map_err(|e| IngestError::Xml(e.to_string()))?;

    let status = doc
        .descendants()
        .find(|n| n.tag_name().name() == "StatusCode")
        .map(|n| n.text().unwrap_or_default().trim().to_string());
    match status.as_deref() {
        Some("Success") => {}
        Some(other) => return Err(IngestError::RemoteStatus(other.to_string())),
        None => return Err(IngestError::RemoteStatus("<missing>".into())),
    }

    let mut out = Vec::new();
    for listing in doc.descendants().filter(|n| n.tag_name().name() == "Listing") {
        let child_text = |name: &str| {
            listing
                .children()
                .find(|c| c.tag_name().name() == name)
                .and_then(|c| c.text())
                .map(|t| t.trim().to_string())
        };
        let url = child_text("DataUrl")
            .ok_or_else(|| IngestError::Xml("Listing without DataUrl".into()))?;
        let rank = child_text("PopularityRank")
            .ok_or_else(|| IngestError::Xml(format!("Listing {url} without PopularityRank")))?;
        let rank: u32 = rank
            .parse()
            .map_err(|_| IngestError::Xml(format!("bad PopularityRank {rank:?}")))?;
        let mut record = SiteRecord::new(&url, rank, "awis")?;
        record.title = child_text("Title");
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const LISTING_RESPONSE: &str = include_str!("../../fixtures/awis_listing.xml");

    #[test]
    fn request_url_matches_listing() {
        let url = build_awis_request("CategoryListings", 20, 1, "Top", "Popularity").unwrap();
        assert_eq!(
            url,
            "https://awis.amazonaws.com/api?Action=CategoryListings&Count=20&Descriptions=True\
             &Path=Top&Recursive=False&ResponseGroup=Listings&SortBy=Popularity&Start=1"
        );
    }

    #[test]
    fn request_pagination() {
        let url = build_awis_request("CategoryListings", 20, 21, "Top", "Popularity").unwrap();
        assert!(url.ends_with("&SortBy=Popularity&Start=21"));
    }

    #[test]
    fn request_count_range() {
        assert!(matches!(
            build_awis_request("CategoryListings", 0, 1, "Top", "Popularity"),
            Err(IngestError::Parameter(_))
        ));
        assert!(build_awis_request("CategoryListings", 21, 1, "Top", "Popularity").is_err());
        assert!(build_awis_request("CategoryListings", 20, 0, "Top", "Popularity").is_err());
    }

    #[test]
    fn request_escapes_category_path() {
        let url = build_awis_request("CategoryListings", 5, 1, "Top/News", "Popularity").unwrap();
        assert!(url.contains("&Path=Top%2FNews&"));
    }

    #[test]
    fn parses_listing_fixture() {
        let sites = parse_awis_xml(LISTING_RESPONSE.as_bytes()).unwrap();
        let got: Vec<_> = sites
            .iter()
            .map(|s| (s.url.as_str(), s.title.as_deref(), s.rank))
            .collect();
        assert_eq!(
            got,
            [
                ("http://www.reddit.com", Some("Reddit.com"), 2),
                ("http://www.cnn.com/", Some("CNN"), 3)
            ]
        );
    }

    #[test]
    fn empty_listings() {
        let xml = LISTING_RESPONSE
            .split("<aws:Listings>")
            .next()
            .unwrap()
            .to_string()
            + "<aws:Listings/>"
            + LISTING_RESPONSE.split("</aws:Listings>").nth(1).unwrap();
        assert!(parse_awis_xml(xml.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn failure_status() {
        let xml = LISTING_RESPONSE.replace(
            "<aws:StatusCode>Success</aws:StatusCode>",
            "<aws:StatusCode>Failure</aws:StatusCode>",
        );
        match parse_awis_xml(xml.as_bytes()) {
            Err(IngestError::RemoteStatus(code)) => assert_eq!(code, "Failure"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_xml() {
        assert!(matches!(
            parse_awis_xml(b"<aws:Listings><oops>"),
            Err(IngestError::Xml(_))
        ));
    }
}
