"""Network config and forward pass related tests are situated here."""

# Third-Party Imports
import numpy as np
import pytest

# Local Imports
from conftest import make_toy_config
from seqmt import autodiff as ad
from seqmt.config import Architecture, HeadKind, LayerKind, Padding, RunConfig, Scale
from seqmt.errors import ConfigError, ContractError, DataError
from seqmt.models import (
    DEFAULT_CONFIG_NAMES,
    LayerSpec,
    NetworkConfig,
    build,
    config_from_run,
    conv,
    default_config,
    dense,
    head,
)


def _images(n=2, size=12, seed=0):
    return np.random.default_rng(seed).uniform(size=(n, 1, size, size))


def test_shapes_seqmt_parameter_count():
    """The Shapes network has six 7x7 conv layers of 16 maps."""
    net = build(default_config("shapes-seqmt"))
    assert net.parameter_count() == 64188
    assert net.config.head is HeadKind.SoftArgmax
    assert net.summary()[0] == "localization.0: Conv 7x7x16, stride 1, SAME"


@pytest.mark.parametrize("name", list(DEFAULT_CONFIG_NAMES))
def test_default_configs_build_at_small_scale(name):
    """Every shipped config builds into a consistent network."""
    config = default_config(name, scale=Scale.Small)
    net = build(config)
    assert net.parameter_count() > 0
    side = 60 if name == "shapes-seqmt" else 40
    assert config.input_size == (side, side, 1)


def test_unknown_model():
    """default_config() names the valid models."""
    with pytest.raises(ConfigError) as cm:
        default_config("mnist-seqmt")
    assert str(cm.value) == (
        "unknown model 'mnist-seqmt', valid models are: "
        "['shapes-seqmt', 'blocks-seqmt', 'blocks-commmt', 'blocks-heatmapmt']"
    )


def test_seqmt_forward_shapes():
    """Seq-MT outputs heatmaps, in-frame landmarks and logits."""
    net = build(make_toy_config())
    pred = net(_images())
    assert pred.heatmaps.shape == (2, 2, 12, 12)
    assert pred.landmarks.shape == (2, 2, 2)
    assert pred.logits.shape == (2, 3)
    assert (pred.landmarks.values >= 0).all() and (pred.landmarks.values <= 11).all()


def test_commmt_forward_shapes():
    """Comm-MT regresses coordinates and has no heatmaps."""
    net = build(make_toy_config(Architecture.CommMT))
    pred = net(_images())
    assert pred.heatmaps is None
    assert pred.landmarks.shape == (2, 2, 2)
    assert pred.logits.shape == (2, 3)


def test_heatmapmt_forward_shapes():
    """Heatmap-MT feeds the heatmaps to the attribute branch."""
    net = build(make_toy_config(Architecture.HeatmapMT))
    pred = net(_images())
    assert pred.heatmaps.shape == (2, 2, 12, 12)
    assert pred.logits.shape == (2, 3)


def test_seqmt_attributes_only_see_the_landmarks():
    """Blocking the landmark gradient leaves the Seq-MT localization untouched."""
    net = build(make_toy_config())
    pred = net(_images())
    pred.landmarks.register_hook(lambda g: np.zeros_like(g))
    ad.softmax_cross_entropy(pred.logits, [0, 1]).backward()
    for p in net.branch_parameters("localization"):
        assert p.grad is None or not p.grad.any()
    assert any(p.grad is not None and p.grad.any() for p in net.branch_parameters("attribute"))


def test_heatmapmt_attributes_bypass_the_landmarks():
    """Heatmap-MT attribute gradients reach the conv stack without the landmarks."""
    net = build(make_toy_config(Architecture.HeatmapMT))
    pred = net(_images())
    pred.landmarks.register_hook(lambda g: np.zeros_like(g))
    ad.softmax_cross_entropy(pred.logits, [0, 1]).backward()
    assert any(p.grad is not None and p.grad.any() for p in net.branch_parameters("localization"))


def test_spatial_softmax_head_decodes_integers():
    """A spatial-softmax head decodes by argmax into pixel coordinates."""
    net = build(make_toy_config(Architecture.HeatmapMT))
    landmarks = net(_images()).landmarks
    assert landmarks.op == "argmax"
    np.testing.assert_array_equal(landmarks.values, np.round(landmarks.values))


def test_build_is_deterministic():
    """Equal seeds give equal weights."""
    first = build(make_toy_config(), seed=3).state_dict()
    second = build(make_toy_config(), seed=3).state_dict()
    other = build(make_toy_config(), seed=4).state_dict()
    for name in first:
        np.testing.assert_array_equal(first[name], second[name])
    assert not np.array_equal(first["localization.0.weight"], other["localization.0.weight"])


def test_attribute_width_is_checked():
    """The attribute branch must end in one unit per class."""
    config = make_toy_config()
    config.attribute = dense(8) + dense(4, relu=False)
    with pytest.raises(ConfigError) as cm:
        build(config)
    assert str(cm.value) == "toy-seqmt: layer 'attribute' should output 3 units, got (4,)"


def test_seqmt_needs_a_soft_argmax_head():
    """Seq-MT refuses a spatial-softmax readout."""
    config = make_toy_config()
    config.localization = conv(3, 2) + head(HeadKind.SpatialSoftmax)
    with pytest.raises(ConfigError) as cm:
        build(config)
    assert str(cm.value) == "toy-seqmt: seq-mt needs a soft-argmax head"
    with pytest.raises(ConfigError) as cm:
        make_toy_config().with_head(HeadKind.SpatialSoftmax)
    assert str(cm.value) == (
        "toy-seqmt: seq-mt feeds the attribute branch through a soft-argmax head, "
        "got head=spatial-softmax"
    )


def test_localization_should_output_k_maps():
    """The conv stack must end in one map per landmark."""
    config = NetworkConfig(
        name="bad",
        architecture=Architecture.SeqMT,
        input_size=(12, 12, 1),
        num_landmarks=2,
        num_classes=3,
        localization=conv(3, 3) + head(HeadKind.SoftArgmax),
        attribute=dense(3, relu=False),
    )
    with pytest.raises(ConfigError) as cm:
        build(config)
    assert str(cm.value) == (
        "bad: layer 'localization' should output 2 maps of 12x12, got (3, 12, 12)"
    )


def test_load_state_dict_checks_names_and_shapes():
    """A checkpoint must match the network exactly."""
    net = build(make_toy_config())
    state = net.state_dict()
    del state["localization.0.bias"]
    with pytest.raises(DataError) as cm:
        net.load_state_dict(state)
    assert str(cm.value) == (
        "checkpoint does not match network 'toy-seqmt': "
        "missing ['localization.0.bias'], unexpected []"
    )
    state["localization.0.bias"] = np.zeros(3)
    with pytest.raises(DataError) as cm:
        net.load_state_dict(state)
    assert str(cm.value) == (
        "checkpoint tensor 'localization.0.bias' has shape (3,), network expects (4,)"
    )


def test_clone_is_independent():
    """Changing a clone leaves the original alone."""
    net = build(make_toy_config())
    other = net.clone()
    other.params["attribute.0.bias"].values[...] = 7.0
    assert not net.params["attribute.0.bias"].values.any()


def test_eval_mode_restores_the_mode():
    """eval_mode() switches dropout off and restores the previous mode."""
    net = build(make_toy_config())
    with net.eval_mode():
        assert not net.training
    assert net.training
    net.eval()
    with net.eval_mode():
        assert not net.training
    assert not net.training


def test_dropout_only_in_train_mode():
    """Train mode draws dropout masks, eval mode is deterministic."""
    config = make_toy_config(Architecture.CommMT)
    config.attribute = dense(8, dropout=0.5) + dense(3, relu=False)
    net = build(config)
    images = _images()
    first = net(images).logits.values
    second = net(images).logits.values
    assert not np.allclose(first, second)
    with net.eval_mode():
        np.testing.assert_array_equal(net(images).logits.values, net(images).logits.values)


def test_commmt_has_no_heatmaps():
    """Asking Comm-MT for heatmaps is a contract violation."""
    net = build(make_toy_config(Architecture.CommMT))
    with pytest.raises(ContractError) as cm:
        net.heatmaps(_images())
    assert str(cm.value) == "comm-mt does not produce heatmaps"


def test_image_shape_is_checked():
    """The images must match the configured input size."""
    net = build(make_toy_config())
    with pytest.raises(ContractError) as cm:
        net(_images(size=10))
    assert str(cm.value) == (
        "toy-seqmt expects images of shape [N, 1, 12, 12], got (2, 1, 10, 10)"
    )


def test_config_from_run_overrides_the_head():
    """The head and beta keys replace the readout of heatmap networks."""
    run_config = RunConfig.from_string(
        "model = blocks-heatmapmt\nscale = small\nhead = soft-argmax\nbeta = 2\n"
    )
    config = config_from_run(run_config)
    assert config.architecture is Architecture.HeatmapMT
    assert config.head is HeadKind.SoftArgmax
    assert config.beta == 2.0
    assert config.input_size == (40, 40, 1)


def test_config_from_run_overrides_the_sizes():
    """Landmark count, class count and image size follow the dataset."""
    run_config = RunConfig.from_string("model = blocks-commmt\n")
    config = config_from_run(run_config, num_landmarks=3, num_classes=4, image_size=40)
    net = build(config)
    assert net.params["landmark_branch.0.weight"].shape[0] == 6
    assert net.params["attribute.0.weight"].shape[0] == 4


def test_layer_spec_accepts_spelled_out_kinds():
    """LayerSpec converts kind and padding names to their enums."""
    layer = LayerSpec("Conv2d", kernel_size=3, out=8, padding="valid")
    assert layer.kind is LayerKind.Conv2d
    assert layer.padding is Padding.Valid
    assert layer.describe() == "Conv 3x3x8, stride 1, VALID"
    with pytest.raises(ValueError):
        LayerSpec("convolution")
