//! JSON form of a propagation graph.

use serde::{Deserialize, Serialize};

use super::{Edge, GainSpec, GraphError, Point3, PropagationGraph, VertexId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub n_t: usize,
    pub n_r: usize,
    pub n_s: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Point3>>,
    pub edges: Vec<EdgeDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDocument {
    pub init: VertexId,
    pub term: VertexId,
    pub phase_rad: f64,
    pub delay_s: f64,
    pub gain: GainSpec,
}

impl From<&PropagationGraph> for GraphDocument {
    fn from(g: &PropagationGraph) -> Self {
        Self {
            n_t: g.n_t,
            n_r: g.n_r,
            n_s: g.n_s,
            positions: g.positions.clone(),
            edges: g
                .edges
                .iter()
                .map(|e| EdgeDocument {
                    init: e.init,
                    term: e.term,
                    phase_rad: e.phase,
                    delay_s: e.delay,
                    gain: e.gain,
                })
                .collect(),
        }
    }
}

impl TryFrom<GraphDocument> for PropagationGraph {
    type Error = GraphError;

    fn try_from(doc: GraphDocument) -> Result<Self, GraphError> {
        let edges = doc
            .edges
            .into_iter()
            .map(|e| Edge::new(e.init, e.term, e.gain, e.phase_rad, e.delay_s))
            .collect();
        PropagationGraph::new(doc.n_t, doc.n_r, doc.n_s, edges, doc.positions)
    }
}

impl PropagationGraph {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GraphDocument::from(self)).expect("graph documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDocument = serde_json::from_str(text)?;
        doc.try_into()
    }
}
