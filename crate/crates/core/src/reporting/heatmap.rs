use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::network::BlockAttention;

/// One rendered word. Words that were not scored (stop words, punctuation
/// from the original text) carry intensity 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapWord {
    pub text: String,
    pub intensity: f64,
    pub scored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapDoc {
    pub record_id: String,
    pub segment: String,
    pub words: Vec<HeatmapWord>,
}

/// Per-token intensity in `[0, 100]`: the largest α among the blocks that
/// contain the token, relative to the largest α in the document. Tokens in
/// no block get 0.
pub fn word_intensities(n_tokens: usize, blocks: &[BlockAttention]) -> Vec<f64> {
    let mut best = vec![0.0f64; n_tokens];
    for b in blocks {
        for i in b.token_range.clone() {
            if i < n_tokens {
                best[i] = best[i].max(b.alpha);
            }
        }
    }
    let top = blocks.iter().map(|b| b.alpha).fold(0.0, f64::max);
    if top <= 0.0 {
        return vec![0.0; n_tokens];
    }
    best.iter().map(|a| (100.0 * a / top).clamp(0.0, 100.0)).collect()
}

/// Heatmap over the processed token stream.
pub fn heatmap_from_tokens(record_id: &str, segment: &str, tokens: &[String], intensities: &[f64]) -> HeatmapDoc {
    let words = tokens
        .iter()
        .zip(intensities)
        .map(|(t, &i)| HeatmapWord { text: t.clone(), intensity: i, scored: true })
        .collect();
    HeatmapDoc { record_id: record_id.to_string(), segment: segment.to_string(), words }
}

/// Heatmap over the original text. `spans[i]` is the byte range of token
/// `i`; text between spans (stop words, punctuation) is kept at intensity 0.
pub fn heatmap_from_text(
    record_id: &str,
    segment: &str,
    text: &str,
    spans: &[(usize, usize)],
    intensities: &[f64],
) -> HeatmapDoc {
    let mut words = Vec::new();
    let push_gap = |gap: &str, words: &mut Vec<HeatmapWord>| {
        for w in gap.split_whitespace() {
            words.push(HeatmapWord { text: w.to_string(), intensity: 0.0, scored: false });
        }
    };
    let mut pos = 0;
    for (&(s, e), &i) in spans.iter().zip(intensities) {
        if s < pos || e > text.len() || s > e {
            continue;
        }
        push_gap(&text[pos..s], &mut words);
        words.push(HeatmapWord { text: text[s..e].to_string(), intensity: i, scored: true });
        pos = e;
    }
    push_gap(&text[pos..], &mut words);
    HeatmapDoc { record_id: record_id.to_string(), segment: segment.to_string(), words }
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Word spans and the colorbar as an HTML fragment.
pub fn heatmap_fragment(doc: &HeatmapDoc) -> String {
    let mut out = String::new();
    let _ = write!(out, "<p class=\"heatmap\">");
    for (k, w) in doc.words.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        let _ = write!(
            out,
            "<span style=\"background-color: rgba(220, 20, 20, {:.3})\" title=\"{:.1}\">{}</span>",
            w.intensity / 100.0,
            w.intensity,
            escape(&w.text)
        );
    }
    out.push_str("</p>\n");
    out.push_str(
        "<div class=\"colorbar\"><span>0</span>\
         <div style=\"display:inline-block;width:200px;height:12px;margin:0 6px;\
         background:linear-gradient(to right, rgba(220,20,20,0), rgba(220,20,20,1))\"></div>\
         <span>100</span></div>\n",
    );
    out
}

/// Self-contained HTML page with one section per document, normally the
/// segments of one record.
pub fn render_heatmap(docs: &[HeatmapDoc]) -> String {
    let mut ids: Vec<&str> = docs.iter().map(|d| d.record_id.as_str()).collect();
    ids.dedup();
    let mut body = String::new();
    for doc in docs {
        let _ = writeln!(body, "<h2>{}</h2>", escape(&doc.segment));
        body.push_str(&heatmap_fragment(doc));
    }
    format!(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{t}</title>\n\
         <style>body {{ font-family: serif; max-width: 48em; margin: 2em auto; line-height: 1.6; }}</style>\n\
         </head>\n<body>\n<h1>{t}</h1>\n{body}</body>\n</html>\n",
        t = escape(&ids.join(", ")),
    )
}
