//! Dependence analyses: control-flow graph, postdominators, control and
//! data dependence, and the program dependence graph the slicers walk.

pub mod cfg;
pub mod control;
pub mod dot;
pub mod pdg;
pub mod postdom;
pub mod reaching;

pub use cfg::{build_cfg, BranchTag, Cfg, CfgNode, NodeFacts};
pub use control::{control_dependences, control_dependences_by_definition, ControlDep};
pub use dot::{cfg_dot, pdg_dot};
pub use pdg::{build_pdg, build_pdg_from_cfg, data_edges_by_use, ControlSource, Pdg};
pub use postdom::{postdominator_sets, postdominators, PostDomTree};
pub use reaching::{reaching_definitions, DefSet, ReachingDefs};
