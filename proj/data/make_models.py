#!/usr/bin/env python3
"""Regenerates the bundled CNN and board descriptors.

Layer lists cover convolution layers only (standard, depthwise, pointwise);
pooling and elementwise ops show up as geometry changes between consecutive
layers. Concatenation inputs (DenseNet) are folded into in_channels.
"""

import json
import math
import os

OUT = os.path.dirname(os.path.abspath(__file__))


class Net:
    def __init__(self, name):
        self.name = name
        self.layers = []

    def conv(self, filters, k, in_ch, ifm, stride=1, kind="standard",
             ofm=None, residual_sources=None):
        layer = {
            "index": len(self.layers) + 1,
            "kind": kind,
            "filters": filters,
            "kernel": [k, k],
            "in_channels": in_ch,
            "ifm": [ifm, ifm],
            "stride": stride,
        }
        if ofm is not None:
            layer["ofm"] = [ofm, ofm]
        if residual_sources:
            layer["residual_sources"] = sorted(residual_sources)
        self.layers.append(layer)
        return layer["index"]

    def dump(self):
        return {"name": self.name, "word_bytes": 1, "layers": self.layers}


def same(ifm, stride):
    return math.ceil(ifm / stride)


def resnet(name, blocks):
    net = Net(name)
    net.conv(64, 7, 3, 224, stride=2)  # -> 112, then 3x3/2 maxpool -> 56
    in_ch = 64
    spatial = 56
    prev_out = 1  # layer producing the running trunk tensor
    widths = [(64, 256), (128, 512), (256, 1024), (512, 2048)]
    for stage, reps in enumerate(blocks):
        mid, out = widths[stage]
        stride = 1 if stage == 0 else 2
        for rep in range(reps):
            s = stride if rep == 0 else 1
            block_in = prev_out
            net.conv(mid, 1, in_ch, spatial)
            net.conv(mid, 3, mid, spatial, stride=s)
            exp = net.conv(out, 1, mid, spatial // s,
                           residual_sources=None if rep == 0 else [block_in])
            if rep == 0:
                # Projection shortcut reads the block input and its result is
                # added to the expansion output. The stage-1 block input passes
                # through the stem maxpool, so its producer is not declared as
                # a live source (the geometry no longer matches).
                srcs = [exp] if stage == 0 else [block_in, exp]
                prev_out = net.conv(out, 1, in_ch, spatial, stride=s,
                                    residual_sources=srcs)
            else:
                prev_out = exp
            spatial //= s
            in_ch = out
    return net


def xception():
    net = Net("xception")
    net.conv(32, 3, 3, 299, stride=2, ofm=149)  # valid padding
    net.conv(64, 3, 32, 149, ofm=147)
    in_ch, spatial = 64, 147
    prev_out = 2

    def sep(filters, ch, sp, sources_on_pw=None):
        net.conv(ch, 3, ch, sp, kind="depthwise")
        return net.conv(filters, 1, ch, sp, kind="pointwise",
                        residual_sources=sources_on_pw)

    # Entry flow: three downsampling residual blocks.
    for filters in (128, 256, 728):
        block_in = prev_out
        pw1 = sep(filters, in_ch, spatial)
        pw2 = sep(filters, filters, spatial)
        # 3x3/2 maxpool follows; the projection consumes the block input.
        prev_out = net.conv(filters, 1, in_ch, spatial, stride=2,
                            residual_sources=[block_in, pw2])
        spatial = same(spatial, 2)
        in_ch = filters
    # Middle flow: eight identity residual blocks at 728 channels.
    for _ in range(8):
        block_in = prev_out
        sep(728, 728, spatial)
        sep(728, 728, spatial)
        prev_out = sep(728, 728, spatial, sources_on_pw=[block_in])
    # Exit flow.
    block_in = prev_out
    sep(728, 728, spatial)
    pw2 = sep(1024, 728, spatial)
    prev_out = net.conv(1024, 1, 728, spatial, stride=2,
                        residual_sources=[block_in, pw2])
    spatial = same(spatial, 2)
    sep(1536, 1024, spatial)
    sep(2048, 1536, spatial)
    return net


def mobilenet_v2():
    net = Net("mobilenet_v2")
    net.conv(32, 3, 3, 224, stride=2)
    in_ch, spatial = 32, 112
    prev_out = 1
    cfg = [(1, 16, 1, 1), (6, 24, 2, 2), (6, 32, 3, 2), (6, 64, 4, 2),
           (6, 96, 3, 1), (6, 160, 3, 2), (6, 320, 1, 1)]
    for t, c, n, s in cfg:
        for rep in range(n):
            stride = s if rep == 0 else 1
            block_in = prev_out
            ch = in_ch
            if t != 1:
                net.conv(in_ch * t, 1, in_ch, spatial, kind="pointwise")
                ch = in_ch * t
            net.conv(ch, 3, ch, spatial, stride=stride, kind="depthwise")
            spatial = same(spatial, stride)
            skip = stride == 1 and in_ch == c
            prev_out = net.conv(c, 1, ch, spatial, kind="pointwise",
                                residual_sources=[block_in] if skip else None)
            in_ch = c
    net.conv(1280, 1, 320, spatial, kind="pointwise")
    return net


def densenet121():
    net = Net("densenet121")
    net.conv(64, 7, 3, 224, stride=2)  # -> 112, then maxpool -> 56
    growth = 32
    in_ch, spatial = 64, 56
    for bi, reps in enumerate((6, 12, 24, 16)):
        for i in range(reps):
            concat_ch = in_ch + growth * i
            net.conv(4 * growth, 1, concat_ch, spatial, kind="pointwise")
            net.conv(growth, 3, 4 * growth, spatial)
        in_ch += growth * reps
        if bi < 3:
            in_ch //= 2
            net.conv(in_ch, 1, in_ch * 2, spatial, kind="pointwise")
            spatial //= 2
    return net


def boards():
    mib = 1024 * 1024
    return [
        {"name": "zc706", "pe_count": 900, "on_chip_bytes": int(2.4 * mib),
         "bandwidth_bytes_per_s": int(3.2e9), "clock_hz": 200000000},
        {"name": "vcu108", "pe_count": 768, "on_chip_bytes": int(7.6 * mib),
         "bandwidth_bytes_per_s": int(19.2e9), "clock_hz": 200000000},
        {"name": "vcu110", "pe_count": 1800, "on_chip_bytes": 4 * mib,
         "bandwidth_bytes_per_s": int(19.2e9), "clock_hz": 200000000},
        {"name": "zcu102", "pe_count": 2520, "on_chip_bytes": int(16.6 * mib),
         "bandwidth_bytes_per_s": int(19.2e9), "clock_hz": 200000000},
    ]


def main():
    nets = [
        resnet("resnet50", (3, 4, 6, 3)),
        resnet("resnet152", (3, 8, 36, 3)),
        xception(),
        mobilenet_v2(),
        densenet121(),
    ]
    expected = {"resnet50": 53, "resnet152": 155, "xception": 74,
                "mobilenet_v2": 52, "densenet121": 120}
    for net in nets:
        assert len(net.layers) == expected[net.name], (net.name, len(net.layers))
        with open(os.path.join(OUT, net.name + ".json"), "w") as f:
            json.dump(net.dump(), f, indent=2, sort_keys=True)
            f.write("\n")
    for b in boards():
        with open(os.path.join(OUT, b["name"] + ".json"), "w") as f:
            json.dump(b, f, indent=2, sort_keys=True)
            f.write("\n")
    print("wrote", len(nets), "CNNs and", len(boards()), "boards")


if __name__ == "__main__":
    main()
