use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::NavPoint;
use crate::profiles::ViewLevel;
use crate::value::Value;

use super::template::SlotKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<Value>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediaValue {
    pub asset: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcategory: Option<String>,
    pub uri: String,
}

/// A bound slot value. JSON is externally tagged, e.g. `{"text": "..."}` or
/// `{"grid": {"columns": [...], "rows": [...]}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SlotValue {
    Text(String),
    Value(Value),
    Values(Vec<Value>),
    Grid(Grid),
    Media(MediaValue),
    Url(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSlot {
    pub name: String,
    pub kind: SlotKind,
    pub value: SlotValue,
}

/// A generated page. `view` records which access level the slots were
/// filtered for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Page {
    pub nav_point: NavPoint,
    pub url: String,
    pub slots: Vec<BoundSlot>,
    pub built_at_seq: u64,
    pub view: ViewLevel,
}

/// The structured wire form of a page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuredPage {
    pub nav_point: NavPoint,
    pub url: String,
    pub slots: Vec<BoundSlot>,
    pub built_at_seq: u64,
}

impl From<&Page> for StructuredPage {
    fn from(p: &Page) -> Self {
        StructuredPage {
            nav_point: p.nav_point.clone(),
            url: p.url.clone(),
            slots: p.slots.clone(),
            built_at_seq: p.built_at_seq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Html,
    Structured,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "html" => Ok(Format::Html),
            "structured" | "json" => Ok(Format::Structured),
            other => Err(Error::Parse(format!("unknown format `{other}`"))),
        }
    }
}

pub fn render_page(page: &Page, format: Format) -> String {
    match format {
        Format::Structured => render_structured(page),
        Format::Html => render_html(page),
    }
}

pub fn render_structured(page: &Page) -> String {
    serde_json::to_string(&StructuredPage::from(page)).expect("page serializes")
}

pub fn parse_structured(doc: &str) -> Result<StructuredPage> {
    serde_json::from_str(doc).map_err(|e| Error::Parse(e.to_string()))
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn cell(v: &Option<Value>) -> String {
    v.as_ref()
        .map(|v| escape(&v.to_string()))
        .unwrap_or_default()
}

/// One `<section class="slot">` per bound slot, in slot order.
pub fn render_html(page: &Page) -> String {
    let mut out = String::new();
    let nav = escape(page.nav_point.as_str());
    let _ = write!(
        out,
        "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>{nav}</title></head>\n\
         <body data-nav=\"{nav}\" data-url=\"{}\" data-seq=\"{}\">\n",
        escape(&page.url),
        page.built_at_seq
    );
    for slot in &page.slots {
        let _ = write!(
            out,
            "<section class=\"slot\" data-slot=\"{}\" data-kind=\"{}\">",
            escape(&slot.name),
            slot.kind.as_str()
        );
        match &slot.value {
            SlotValue::Text(t) => out.push_str(&escape(t)),
            SlotValue::Value(v) => out.push_str(&escape(&v.to_string())),
            SlotValue::Values(vs) => {
                out.push_str("<ul>");
                for v in vs {
                    let _ = write!(out, "<li>{}</li>", escape(&v.to_string()));
                }
                out.push_str("</ul>");
            }
            SlotValue::Grid(g) => {
                out.push_str("<table><thead><tr>");
                for c in &g.columns {
                    let _ = write!(out, "<th>{}</th>", escape(c));
                }
                out.push_str("</tr></thead><tbody>");
                for row in &g.rows {
                    out.push_str("<tr>");
                    for v in row {
                        let _ = write!(out, "<td>{}</td>", cell(v));
                    }
                    out.push_str("</tr>");
                }
                out.push_str("</tbody></table>");
            }
            SlotValue::Media(m) => match m.category.as_str() {
                "image" => {
                    let _ = write!(
                        out,
                        "<img src=\"{}\" alt=\"{}\">",
                        escape(&m.uri),
                        escape(&m.asset)
                    );
                }
                "video" => {
                    let _ = write!(out, "<video src=\"{}\" controls></video>", escape(&m.uri));
                }
                _ => {
                    let _ = write!(out, "<audio src=\"{}\" controls></audio>", escape(&m.uri));
                }
            },
            SlotValue::Url(u) => {
                let _ = write!(out, "<a href=\"{0}\">{0}</a>", escape(u));
            }
        }
        out.push_str("</section>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}
