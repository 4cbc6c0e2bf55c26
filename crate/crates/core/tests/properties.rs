use std::sync::OnceLock;

use proptest::prelude::*;

use rms_core::cover::{glue_predicate, reversal_between};
use rms_core::numeric::{observed_type, sample_normal_config};
use rms_core::orientation::walls;
use rms_core::planar::{enumerate_oplanar, lifts, reverse_at, VertexData};
use rms_core::real::{sigma_invariance, sigma_normal};
use rms_core::strata::{build_poset, StratifiedComplex};
use rms_core::tree::Tree;

const SHAPES: [(u32, u32); 6] = [(0, 5), (1, 3), (2, 1), (0, 6), (1, 4), (2, 2)];

fn shape() -> impl Strategy<Value = (u32, u32)> {
    (0..SHAPES.len()).prop_map(|i| SHAPES[i])
}

fn complex(k: u32, l: u32) -> &'static StratifiedComplex {
    static ALL: OnceLock<Vec<StratifiedComplex>> = OnceLock::new();
    let all = ALL.get_or_init(|| SHAPES.iter().map(|(k, l)| build_poset(&sigma_normal(*k, *l).unwrap())).collect());
    &all[SHAPES.iter().position(|x| *x == (k, l)).unwrap()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn samples_realize_their_type((k, l) in shape(), pick in any::<usize>(), seed in any::<u64>()) {
        let s = sigma_normal(k, l).unwrap();
        let tree = Tree::one_vertex(s.n());
        let iota = sigma_invariance(&tree, &s).unwrap();
        let os = enumerate_oplanar(&tree, &iota);
        let o = &os[pick % os.len()];
        let cfg = sample_normal_config(&s, o, seed).unwrap();
        let (plus, order) = observed_type(&cfg, s.n());
        prop_assert_eq!(plus.as_slice(), o.plus_at(0));
        prop_assert_eq!(order.as_slice(), o.order_at(0));
    }

    #[test]
    fn reversal_is_an_involution((k, l) in shape(), pick in any::<usize>(), which in any::<usize>()) {
        let cx = complex(k, l);
        let st = &cx.strata[pick % cx.strata.len()];
        let ls = lifts(&st.tree, &st.iota, &st.u);
        let o = &ls[which % ls.len()];
        for v in st.iota.real_vertices.iter().copied().filter(|v| o.data(*v) != &VertexData::Empty) {
            let r = reverse_at(&st.tree, &st.iota, o, v).unwrap();
            prop_assert_ne!(&r, o);
            prop_assert_eq!(&reverse_at(&st.tree, &st.iota, &r, v).unwrap(), o);
        }
    }

    #[test]
    fn gluing_is_symmetric((k, l) in shape(), pick in any::<usize>()) {
        let cx = complex(k, l);
        let ws = walls(cx);
        let st = &cx.strata[ws[pick % ws.len()]];
        let ls = lifts(&st.tree, &st.iota, &st.u);
        for a in &ls {
            for b in &ls {
                let ab = glue_predicate(&st.tree, &st.iota, a, b);
                prop_assert_eq!(ab, glue_predicate(&st.tree, &st.iota, b, a));
                if ab.is_some() {
                    prop_assert!(reversal_between(&st.tree, &st.iota, a, b).is_some());
                }
            }
        }
    }
}
