//! Carbon-emission-flow (CEF) baseline: proportional-sharing flow tracing
//! giving nodal carbon intensities (NCI), branch intensities (BCI), and
//! demand-side allocations, for comparison with the sensitivity-based
//! metrics.

use crate::error::{CarbonError, Result};
use crate::grid::{CaseData, PtdfMatrix};
use crate::linalg::{solve_dense, Mat};

/// CEF results per period.
#[derive(Debug, Clone)]
pub struct CefResult {
    /// Nodal carbon intensity (tCO2/MWh) per `[period][bus]`.
    pub nci: Vec<Vec<f64>>,
    /// Branch carbon intensity (tCO2/MWh) per `[period][line]`; the
    /// sending bus's NCI under proportional sharing.
    pub bci: Vec<Vec<f64>>,
    /// Demand-side allocation (tCO2) per `[period][bus]`.
    pub allocation: Vec<Vec<f64>>,
    /// Signed line flows (MW, from -> to) per `[period][line]`.
    pub flows: Vec<Vec<f64>>,
}

/// DC line flows for balanced per-bus injections.
pub fn compute_flows(ptdf: &PtdfMatrix, injections: &[f64]) -> Result<Vec<f64>> {
    let imbalance: f64 = injections.iter().sum();
    if imbalance.abs() > 1e-8 {
        return Err(CarbonError::Imbalance(format!(
            "net injection {imbalance:.3e} MW"
        )));
    }
    Ok(ptdf.flows(injections))
}

/// Solve the proportional-sharing mixing balance for every period of a
/// dispatch. For each bus: (local generation + total inflow) * NCI equals
/// local generator emissions plus inflow emissions priced at the sending
/// bus's NCI. Solved as one linear system per period, so cyclic flow
/// patterns are handled.
pub fn cef_solve(
    case: &CaseData,
    dispatch: &[Vec<f64>],
    flows: &[Vec<f64>],
) -> Result<CefResult> {
    let nb = case.n_buses();
    let nl = case.lines.len();
    let mut nci_all = Vec::new();
    let mut bci_all = Vec::new();
    let mut alloc_all = Vec::new();
    for (t, (x, f)) in dispatch.iter().zip(flows).enumerate() {
        let mut gen_mw = vec![0.0; nb];
        let mut gen_emis = vec![0.0; nb];
        for (g, &p) in case.generators.iter().zip(x.iter()) {
            let i = case.bus_index(g.bus).expect("validated");
            gen_mw[i] += p;
            gen_emis[i] += g.emission_t_per_mwh * p;
        }
        // a[(i,i)] * NCI_i - sum over inflows |f_l| * NCI_send = gen_emis_i
        let mut a = Mat::zeros(nb, nb);
        let mut rhs = vec![0.0; nb];
        let mut total_in = vec![0.0; nb];
        for (li, line) in case.lines.iter().enumerate() {
            let from = case.bus_index(line.from_bus).unwrap();
            let to = case.bus_index(line.to_bus).unwrap();
            let (send, recv) = if f[li] >= 0.0 { (from, to) } else { (to, from) };
            let mag = f[li].abs();
            total_in[recv] += mag;
            a[(recv, send)] -= mag;
        }
        let loads = case.load_vector(t);
        for i in 0..nb {
            let input = gen_mw[i] + total_in[i];
            if input <= 1e-9 {
                if loads[i] > 1e-9 {
                    return Err(CarbonError::SingularMixing(format!(
                        "bus {} has load but no generation or inflow in period {}",
                        case.buses[i].id,
                        t + 1
                    )));
                }
                // no power through this bus: pin NCI to zero
                for j in 0..nb {
                    a[(i, j)] = 0.0;
                }
                a[(i, i)] = 1.0;
                rhs[i] = 0.0;
            } else {
                a[(i, i)] += input;
                rhs[i] = gen_emis[i];
            }
        }
        let nci = solve_dense(&a, &rhs).ok_or_else(|| {
            CarbonError::SingularMixing(format!("mixing system singular in period {}", t + 1))
        })?;
        let bci: Vec<f64> = (0..nl)
            .map(|li| {
                let line = &case.lines[li];
                let from = case.bus_index(line.from_bus).unwrap();
                let to = case.bus_index(line.to_bus).unwrap();
                let send = if f[li] >= 0.0 { from } else { to };
                nci[send]
            })
            .collect();
        let alloc: Vec<f64> = (0..nb).map(|i| nci[i] * loads[i]).collect();
        nci_all.push(nci);
        bci_all.push(bci);
        alloc_all.push(alloc);
    }
    Ok(CefResult {
        nci: nci_all,
        bci: bci_all,
        allocation: alloc_all,
        flows: flows.to_vec(),
    })
}

/// Convenience: flows from dispatch and loads, then the CEF solve.
pub fn cef_from_dispatch(
    case: &CaseData,
    ptdf: &PtdfMatrix,
    dispatch: &[Vec<f64>],
) -> Result<CefResult> {
    let nb = case.n_buses();
    let mut flows = Vec::new();
    for (t, x) in dispatch.iter().enumerate() {
        let loads = case.load_vector(t);
        let mut inj = vec![0.0; nb];
        for (g, &p) in case.generators.iter().zip(x.iter()) {
            inj[case.bus_index(g.bus).unwrap()] += p;
        }
        for i in 0..nb {
            inj[i] -= loads[i];
        }
        flows.push(compute_flows(ptdf, &inj)?);
    }
    cef_solve(case, dispatch, &flows)
}
