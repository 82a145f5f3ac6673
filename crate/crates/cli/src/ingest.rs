//! Tab-separated edge lists: `src_type src_id link_type dst_type dst_id weight`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hin_recovery::{GraphBuilder, LinkTypeId, NodeTypeId, TypedGraph};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Line { path: PathBuf, line: usize, message: String },
}

/// A loaded graph plus the opaque string id of every node, by type and
/// dense index.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeList {
    pub graph: TypedGraph,
    pub ids: Vec<Vec<String>>,
}

impl EdgeList {
    pub fn node_index(&self, t: NodeTypeId, id: &str) -> Option<usize> {
        self.ids[t.0].iter().position(|x| x == id)
    }

    /// Display label of node `index` of type `t`; the hole prints as `<hole>`.
    pub fn label(&self, t: NodeTypeId, index: usize) -> &str {
        self.ids[t.0].get(index).map_or("<hole>", String::as_str)
    }

    /// Lookup table for category files and `--source` arguments.
    pub fn id_map(&self, t: NodeTypeId) -> HashMap<&str, usize> {
        self.ids[t.0].iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
    }
}

struct Record {
    line: usize,
    link: usize,
    src: usize,
    dst: usize,
    weight: f64,
}

pub fn load(path: &Path, header: bool) -> Result<EdgeList, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text, header).map_err(|(line, message)| IngestError::Line {
        path: path.to_path_buf(),
        line,
        message,
    })
}

/// Parses edge-list text. Errors carry the 1-based line number.
pub fn parse(text: &str, header: bool) -> Result<EdgeList, (usize, String)> {
    let mut type_names: Vec<String> = Vec::new();
    let mut ids: Vec<Vec<String>> = Vec::new();
    let mut id_index: Vec<HashMap<String, usize>> = Vec::new();
    // name, source type, target type
    let mut links: Vec<(String, usize, usize)> = Vec::new();
    let mut records = Vec::new();
    let mut skipped_header = !header;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim_end_matches('\r');
        if content.trim().is_empty() || content.starts_with('#') {
            continue;
        }
        if !skipped_header {
            skipped_header = true;
            continue;
        }
        let fields: Vec<&str> = content.split('\t').collect();
        if fields.len() != 6 {
            return Err((line, format!("expected 6 tab-separated fields, found {}", fields.len())));
        }
        if let Some(empty) = fields.iter().position(|f| f.is_empty()) {
            return Err((line, format!("field {} is empty", empty + 1)));
        }
        let weight: f64 = fields[5]
            .trim()
            .parse()
            .map_err(|_| (line, format!("invalid weight `{}`", fields[5])))?;
        if !weight.is_finite() || weight < 0.0 {
            return Err((line, format!("weight `{}` must be finite and non-negative", fields[5])));
        }
        let mut node = |type_name: &str, id: &str| -> (usize, usize) {
            let t = type_names.iter().position(|n| n == type_name).unwrap_or_else(|| {
                type_names.push(type_name.to_string());
                ids.push(Vec::new());
                id_index.push(HashMap::new());
                type_names.len() - 1
            });
            let next = ids[t].len();
            let idx = *id_index[t].entry(id.to_string()).or_insert_with(|| {
                ids[t].push(id.to_string());
                next
            });
            (t, idx)
        };
        let (st, src) = node(fields[0], fields[1]);
        let (dt, dst) = node(fields[3], fields[4]);
        let link = match links.iter().position(|l| l.0 == fields[2]) {
            Some(l) => {
                let (_, s, d) = &links[l];
                if (*s, *d) != (st, dt) {
                    return Err((
                        line,
                        format!(
                            "link type `{}` connects {} -> {} but was declared {} -> {}",
                            fields[2], type_names[st], type_names[dt], type_names[*s], type_names[*d]
                        ),
                    ));
                }
                l
            }
            None => {
                links.push((fields[2].to_string(), st, dt));
                links.len() - 1
            }
        };
        records.push(Record {
            line,
            link,
            src,
            dst,
            weight,
        });
    }

    let mut b = GraphBuilder::new();
    for (name, v) in type_names.iter().zip(&ids) {
        b.node_type(name, v.len()).map_err(|e| (0, e.to_string()))?;
    }
    for (name, s, d) in &links {
        b.link_type(name, &type_names[*s], &type_names[*d])
            .map_err(|e| (0, e.to_string()))?;
    }
    for r in records {
        b.edge(LinkTypeId(r.link), r.src, r.dst, r.weight)
            .map_err(|e| (r.line, e.to_string()))?;
    }
    Ok(EdgeList { graph: b.build(), ids })
}

/// Writes the graph back in edge-list form, link type by link type.
pub fn dump(list: &EdgeList) -> String {
    let g = &list.graph;
    let mut out = String::new();
    for (l, lt) in g.link_types().iter().enumerate() {
        for (s, d, w) in g.weights(LinkTypeId(l)).triplets() {
            if g.is_hole(lt.source, s) || g.is_hole(lt.target, d) {
                continue;
            }
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                g.node_type(lt.source).name,
                list.label(lt.source, s),
                lt.name,
                g.node_type(lt.target).name,
                list.label(lt.target, d),
                w
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# reply graph\n\
        user\tu1\tUH\thashtag\th1\t1\n\
        user\tu1\tUH\thashtag\th2\t2.5\n\
        user\tu2\tRP\tuser\tu1\t1\n\
        \n\
        user\tu3\tUH\thashtag\th1\t0.5\n";

    #[test]
    fn first_seen_dense_ids() {
        let l = parse(SAMPLE, false).unwrap();
        assert_eq!(l.ids[0], ["u1", "u2", "u3"]);
        assert_eq!(l.ids[1], ["h1", "h2"]);
        let uh = l.graph.link_type_id("UH").unwrap();
        assert_eq!(l.graph.weights(uh).get(0, 1), 2.5);
        assert_eq!(l.graph.edge_count(uh), 3);
    }

    #[test]
    fn header_line_is_skipped_only_on_request() {
        let with = format!("src_type\tsrc_id\tlink_type\tdst_type\tdst_id\tweight\n{SAMPLE}");
        assert!(parse(&with, true).is_ok());
        let (line, msg) = parse(&with, false).unwrap_err();
        assert_eq!(line, 1);
        assert!(msg.contains("weight"), "{msg}");
    }

    #[test]
    fn errors_name_the_line() {
        let bad = SAMPLE.replace("2.5", "abc");
        assert_eq!(parse(&bad, false).unwrap_err(), (3, "invalid weight `abc`".to_string()));
        let neg = SAMPLE.replace("2.5", "-1");
        assert_eq!(parse(&neg, false).unwrap_err().0, 3);
        let inf = SAMPLE.replace("2.5", "inf");
        assert_eq!(parse(&inf, false).unwrap_err().0, 3);
        let short = SAMPLE.replace("\th2\t2.5", "\th2");
        assert_eq!(parse(&short, false).unwrap_err().0, 3);
        let clash = format!("{SAMPLE}hashtag\th1\tRP\tuser\tu1\t1\n");
        let (line, msg) = parse(&clash, false).unwrap_err();
        assert_eq!(line, 7);
        assert!(msg.contains("RP"));
    }

    #[test]
    fn dump_round_trips() {
        let l = parse(SAMPLE, false).unwrap();
        let text = dump(&l);
        let again = parse(&text, false).unwrap();
        assert_eq!(dump(&again), text);
        assert_eq!(parse(&dump(&again), false).unwrap(), again);
        for i in 0..l.graph.link_types().len() {
            let id = LinkTypeId(i);
            let j = again.graph.link_type_id(&l.graph.link(id).name).unwrap();
            assert_eq!(l.graph.weights(id).total(), again.graph.weights(j).total());
        }
    }
}
