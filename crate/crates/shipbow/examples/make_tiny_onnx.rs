//! Write a tiny self-contained ONNX feature extractor for trying out the
//! deep descriptor provider without downloading a real network.
//!
//! The graph takes a 1x3x224x224 image, average-pools it to 3x4x4, flattens
//! and applies a fixed 48x128 linear map, so its single output `features`
//! is a 128-wide penultimate-layer stand-in.
//!
//! ```bash
//! cargo run --release --example make_tiny_onnx -- /tmp/tiny.onnx
//! SHIPBOW_ONNX_MODEL=/tmp/tiny.onnx cargo run --release --example onnx_descriptors
//! ```

use prost::Message;
use tract_onnx::pb;

const FEATURE_DIM: usize = 128;
const POOLED: usize = 3 * 4 * 4;

fn float_tensor(name: &str, dims: &[i64], data: Vec<f32>) -> pb::TensorProto {
    pb::TensorProto {
        name: name.into(),
        dims: dims.to_vec(),
        data_type: pb::tensor_proto::DataType::Float as i32,
        float_data: data,
        ..Default::default()
    }
}

fn int64_tensor(name: &str, dims: &[i64], data: Vec<i64>) -> pb::TensorProto {
    pb::TensorProto {
        name: name.into(),
        dims: dims.to_vec(),
        data_type: pb::tensor_proto::DataType::Int64 as i32,
        int64_data: data,
        ..Default::default()
    }
}

fn float_value_info(name: &str, dims: &[i64]) -> pb::ValueInfoProto {
    pb::ValueInfoProto {
        name: name.into(),
        r#type: Some(pb::TypeProto {
            value: Some(pb::type_proto::Value::TensorType(pb::type_proto::Tensor {
                elem_type: pb::tensor_proto::DataType::Float as i32,
                shape: Some(pb::TensorShapeProto {
                    dim: dims
                        .iter()
                        .map(|&d| pb::tensor_shape_proto::Dimension {
                            value: Some(pb::tensor_shape_proto::dimension::Value::DimValue(d)),
                            ..Default::default()
                        })
                        .collect(),
                }),
            })),
            ..Default::default()
        }),
        ..Default::default()
    }
}

fn ints_attribute(name: &str, ints: &[i64]) -> pb::AttributeProto {
    pb::AttributeProto {
        name: name.into(),
        r#type: pb::attribute_proto::AttributeType::Ints as i32,
        ints: ints.to_vec(),
        ..Default::default()
    }
}

fn node(op: &str, inputs: &[&str], outputs: &[&str], attrs: Vec<pb::AttributeProto>) -> pb::NodeProto {
    pb::NodeProto {
        input: inputs.iter().map(|s| s.to_string()).collect(),
        output: outputs.iter().map(|s| s.to_string()).collect(),
        name: format!("{op}_{}", outputs[0]),
        op_type: op.into(),
        attribute: attrs,
        ..Default::default()
    }
}

/// Deterministic pseudo-random weight in [-0.25, 0.25].
fn weight(i: usize) -> f32 {
    let mut state = (i as u64).wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(0xD1B54A32D192ED03);
    state ^= state >> 29;
    state = state.wrapping_mul(0xBF58476D1CE4E5B9);
    state ^= state >> 32;
    ((state % 10_000) as f32 / 10_000.0 - 0.5) * 0.5
}

/// Assemble the model file bytes.
pub fn tiny_feature_model() -> Vec<u8> {
    let w: Vec<f32> = (0..POOLED * FEATURE_DIM).map(weight).collect();
    let b: Vec<f32> = (0..FEATURE_DIM).map(|i| weight(i + 1_000_000)).collect();

    let graph = pb::GraphProto {
        name: "tiny_feature_net".into(),
        node: vec![
            node(
                "AveragePool",
                &["image"],
                &["pooled"],
                vec![
                    ints_attribute("kernel_shape", &[56, 56]),
                    ints_attribute("strides", &[56, 56]),
                ],
            ),
            node("Reshape", &["pooled", "flat_shape"], &["flat"], vec![]),
            node("MatMul", &["flat", "embed_w"], &["embedded"], vec![]),
            node("Add", &["embedded", "embed_b"], &["features"], vec![]),
        ],
        initializer: vec![
            int64_tensor("flat_shape", &[2], vec![1, POOLED as i64]),
            float_tensor("embed_w", &[POOLED as i64, FEATURE_DIM as i64], w),
            float_tensor("embed_b", &[FEATURE_DIM as i64], b),
        ],
        input: vec![float_value_info("image", &[1, 3, 224, 224])],
        output: vec![float_value_info("features", &[1, FEATURE_DIM as i64])],
        ..Default::default()
    };
    let model = pb::ModelProto {
        ir_version: 8,
        producer_name: "shipbow".into(),
        opset_import: vec![pb::OperatorSetIdProto {
            domain: String::new(),
            version: 13,
        }],
        graph: Some(graph),
        ..Default::default()
    };
    let mut buf = Vec::new();
    model.encode(&mut buf).expect("serialize model");
    buf
}

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::path::PathBuf::from("tiny_feature_net.onnx"));
    let bytes = tiny_feature_model();
    std::fs::write(&out, &bytes).expect("write model file");
    println!("wrote {} ({} bytes)", out.display(), bytes.len());
    println!("try: SHIPBOW_ONNX_MODEL={} cargo run --example onnx_descriptors", out.display());
}
