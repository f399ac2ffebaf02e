use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::pipeline::{at, write_output, PipelineRun, Stage, StageError};
use crate::elliptic::{evaluate, field_csv};
use crate::geometry::VtkWriter;
use crate::Error;

/// Which members of the final family to dump: `all`, `none` or a comma
/// separated index list such as `0,2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MemberSelector {
    All,
    Indices(Vec<usize>),
}

impl FromStr for MemberSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        match s {
            "all" => Ok(MemberSelector::All),
            "" | "none" => Ok(MemberSelector::Indices(Vec::new())),
            list => list
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("bad member index `{t}` in `{list}`")))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(MemberSelector::Indices),
        }
    }
}

impl MemberSelector {
    fn resolve(&self, count: usize) -> Result<Vec<usize>, Error> {
        match self {
            MemberSelector::All => Ok((0..count).collect()),
            MemberSelector::Indices(idx) => {
                if let Some(&bad) = idx.iter().find(|&&i| i >= count) {
                    return Err(Error::invalid(format!("member {bad} does not exist (family has {count})")));
                }
                Ok(idx.clone())
            }
        }
    }
}

/// Writes `member_<i>.csv` per selected member, `margins.csv` with the
/// final per-sample margins and, unless the selection is empty, one legacy
/// VTK file `family.vtk` holding the selected members on the mesh.
pub fn dump_fields(run: &PipelineRun, which: &MemberSelector, dir: &Path) -> Result<Vec<PathBuf>, StageError> {
    let err = at(Stage::Dump);
    let family = run.final_family_for(Stage::Dump)?;
    let adm = run
        .report
        .admissibility
        .as_ref()
        .ok_or_else(|| err(Error::invalid("verify stage has not run")))?;
    let selected = which.resolve(family.len()).map_err(&err)?;
    let mut written = Vec::new();
    for &i in &selected {
        let records = evaluate(&family.members()[i], family.region()).map_err(&err)?;
        written.push(write_output(dir, &format!("member_{i}.csv"), &field_csv(&records)).map_err(&err)?);
    }
    written.push(write_output(dir, "margins.csv", &adm.margin_csv(family.region().points())).map_err(&err)?);
    if !selected.is_empty() {
        let names: Vec<(String, String)> = selected.iter().map(|i| (format!("u{i}"), format!("grad_u{i}"))).collect();
        let mut vtk = VtkWriter::new(&run.mesh, "final boundary data solutions");
        for (&i, (u, g)) in selected.iter().zip(&names) {
            let m = &family.members()[i];
            vtk = vtk.point_scalar(u.clone(), m.nodal_values()).cell_vector(g.clone(), m.element_gradients());
        }
        let path = dir.join("family.vtk");
        vtk.write(&path).map_err(&err)?;
        written.push(path);
    }
    Ok(written)
}
