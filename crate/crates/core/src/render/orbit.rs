use std::collections::HashSet;
use std::fmt::Write as _;

use crate::cycle::{equal_up_to_scale, normalize, reflect, Cycle, CycleError, Metric};
use crate::symkern::{Probe, ZeroTest};

use super::{cycle_shape, fmt_num, header, numeric_cycle, RenderError, Viewport};

pub const MAX_DEPTH: usize = 12;

/// Distinct images of a seed under words in the mirror reflections.
#[derive(Clone, Debug)]
pub struct Orbit {
    /// Cycles in discovery order; the seed comes first.
    pub cycles: Vec<Cycle>,
    /// Word length at which each cycle first appeared.
    pub depths: Vec<usize>,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

/// Breadth-first closure over reduced words of length at most `depth`,
/// deduplicated up to scale.
pub fn orbit(mirrors: &[Cycle], seed: &Cycle, depth: usize, g: &Metric, probe: &Probe) -> Result<Orbit, RenderError> {
    if depth > MAX_DEPTH {
        return Err(RenderError::TooDeep(depth));
    }
    let key = |c: &Cycle| normalize(c, probe).map(|n| n.cycle);
    let mut seen: HashSet<Cycle> = HashSet::from([key(seed)?]);
    let mut out = Orbit { cycles: vec![seed.clone()], depths: vec![0] };
    // frontier entries remember the last mirror so words stay reduced
    let mut frontier: Vec<(Cycle, Option<usize>)> = vec![(seed.clone(), None)];
    for d in 1..=depth {
        let mut next = Vec::new();
        for (c, last) in &frontier {
            for (j, mirror) in mirrors.iter().enumerate() {
                if Some(j) == *last {
                    continue;
                }
                let img = reflect(mirror, c, g, probe)?;
                let k = key(&img)?;
                let irrational = k.coeffs().iter().any(|e| !e.is_atom_free());
                if seen.contains(&k) || irrational && out.cycles.iter().any(|o| equal_up_to_scale(o, &k, probe) == ZeroTest::Zero) {
                    continue;
                }
                seen.insert(k.clone());
                out.cycles.push(k.clone());
                out.depths.push(d);
                next.push((k, Some(j)));
            }
        }
        frontier = next;
    }
    Ok(out)
}

/// Renders the orbit; mirrors are drawn dashed.
pub fn render_orbit(mirrors: &[Cycle], seed: &Cycle, depth: usize, vp: &Viewport, g: &Metric, probe: &Probe) -> Result<(String, Orbit), RenderError> {
    for m in mirrors {
        if probe.zero_test(&crate::cycle::inner(m, m, g)?) == ZeroTest::Zero {
            return Err(CycleError::DegenerateMirror.into());
        }
    }
    let orb = orbit(mirrors, seed, depth, g, probe)?;
    let none = Default::default();
    let mut s = header(vp);
    let _ = writeln!(s, r#"<g transform="scale(1,-1)" fill="none" stroke="black" vector-effect="non-scaling-stroke">"#);
    for (i, m) in mirrors.iter().enumerate() {
        if let Some(num) = numeric_cycle(m, &none, probe.bits)? {
            let shape = cycle_shape(&num, g.sigma, vp)?;
            let _ = writeln!(s, r#"<g id="mirror-{i}" class="mirror" stroke-dasharray="4 2">{}</g>"#, shape.svg(3.0 * vp.unit()));
        }
    }
    for (i, (c, d)) in orb.cycles.iter().zip(&orb.depths).enumerate() {
        if let Some(num) = numeric_cycle(c, &none, probe.bits)? {
            let shape = cycle_shape(&num, g.sigma, vp)?;
            let _ = writeln!(s, r#"<g id="orbit-{i}" class="cycle depth-{d}">{}</g>"#, shape.svg(3.0 * vp.unit()));
        }
    }
    let _ = writeln!(s, "</g>");
    let [x0, _, _, y1] = vp.bounds();
    let u = vp.unit();
    let _ = writeln!(
        s,
        r#"<text class="count" x="{}" y="{}" font-size="{}">{} cycles</text>"#,
        fmt_num(x0 + 4.0 * u),
        fmt_num(-y1 + 16.0 * u),
        fmt_num(12.0 * u),
        orb.len()
    );
    s.push_str("</svg>\n");
    Ok((s, orb))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mirror() {
        let (g, p) = (Metric::euclidean(), Probe::default());
        let o = orbit(&[Cycle::real_line()], &Cycle::ints(1, 1, 2, 4), 1, &g, &p).unwrap();
        assert_eq!(o.len(), 2);
        let o = orbit(&[Cycle::real_line()], &Cycle::ints(1, 1, 2, 4), 5, &g, &p).unwrap();
        assert_eq!(o.len(), 2);
    }

    #[test]
    fn klein_four_group() {
        let (g, p) = (Metric::euclidean(), Probe::default());
        let mirrors = [Cycle::real_line(), Cycle::ints(0, 1, 0, 0)];
        let seed = Cycle::ints(1, 2, 1, 4);
        for depth in 2..=6 {
            assert_eq!(orbit(&mirrors, &seed, depth, &g, &p).unwrap().len(), 4);
        }
    }

    #[test]
    fn limits() {
        let (g, p) = (Metric::euclidean(), Probe::default());
        let seed = Cycle::ints(1, 2, 1, 4);
        assert_eq!(orbit(&[Cycle::real_line()], &seed, 13, &g, &p).unwrap_err(), RenderError::TooDeep(13));
        let point = Cycle::ints(1, 0, 0, 0);
        let e = render_orbit(&[point], &seed, 2, &Viewport::default(), &g, &p).unwrap_err();
        assert_eq!(e, RenderError::Cycle(CycleError::DegenerateMirror));
        let (svg, o) = render_orbit(&[Cycle::real_line()], &seed, 2, &Viewport::default(), &g, &p).unwrap();
        assert_eq!(o.len(), 2);
        assert!(svg.contains(r#"id="orbit-1""#));
    }
}
