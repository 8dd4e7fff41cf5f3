pub mod arith;
pub mod bbox;
pub mod finite_field;
pub mod oracle;
pub mod involution;
pub mod lift;
pub mod plane;
pub mod frame;
pub mod kfield;
pub mod serendipity;
pub mod morphism;
pub mod pipeline;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/black-boxes.md")]
pub mod black_boxes {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/involutions.md")]
pub mod involutions {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/frames.md")]
pub mod frames {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/field.md")]
pub mod field {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/unipotents.md")]
pub mod unipotents {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/morphisms.md")]
pub mod morphisms {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline_guide {}
