use super::VeracityError;

/// Separator between claim and evidence segments.
pub const SEP: &str = "[SEP]";
/// Stands in for the evidence segment when no evidence was found.
pub const NO_EVIDENCE: &str = "[NO_EVIDENCE]";
/// Words of article content seen by the content-only baseline.
pub const CONTENT_WORDS: usize = 500;

/// First `n` whitespace words of the article body.
pub fn featurize_content(body: &str, n: usize) -> Result<String, VeracityError> {
    let words: Vec<&str> = body.split_whitespace().take(n).collect();
    if words.is_empty() {
        return Err(VeracityError::EmptyInput);
    }
    Ok(words.join(" "))
}

/// `C [SEP] E`, with [`NO_EVIDENCE`] in place of an empty `E`.
pub fn featurize_concat(claim: &str, evidence: &str) -> Result<String, VeracityError> {
    let claim = claim.trim();
    if claim.is_empty() {
        return Err(VeracityError::EmptyClaim);
    }
    let evidence = match evidence.trim() {
        "" => NO_EVIDENCE,
        e => e,
    };
    Ok(format!("{claim} {SEP} {evidence}"))
}
