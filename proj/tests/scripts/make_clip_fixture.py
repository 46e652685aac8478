#!/usr/bin/env python3
"""Regenerates the tiny CLIP checkpoint and golden tensors under tests/data/clip_tiny.

Reference path: Hugging Face transformers (CLIPModel, CLIPTokenizer, PIL-based
CLIPImageProcessor) plus open_clip's tokenizer as a second opinion on token ids.
Weights are random (seeded) and rounded to float16 so the stored checkpoint and
the reference forward pass see identical parameters.

    python3 tests/scripts/make_clip_fixture.py
"""
import json
import os
import shutil
import tempfile

import numpy as np
import torch
from PIL import Image
from safetensors.torch import save_file
from skimage import data as skdata
from transformers import CLIPConfig, CLIPModel, CLIPTokenizer
from transformers import CLIPImageProcessorPil

import open_clip

ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
OUT = os.path.join(ROOT, "tests", "data", "clip_tiny")
MERGES = os.path.join(ROOT, "models", "clip-vit-base-patch32", "merges.txt")
PREPROC = os.path.join(ROOT, "models", "clip-vit-base-patch32", "preprocessor_config.json")

PROMPTS = [
    "the face of a man",
    "the face of a woman",
    "A person in the 50-59 age group",
    "A person in the 70+ age group",
    "Hello,   World!! it's   CLIP's tokenizer",
    "café naïve über 123 4567",
]


def bytes_to_unicode():
    bs = list(range(ord("!"), ord("~") + 1)) + list(range(ord("¡"), ord("¬") + 1)) + list(range(ord("®"), ord("ÿ") + 1))
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, [chr(c) for c in cs]))


def write_vocab(dst):
    merges = [l for l in open(MERGES, encoding="utf-8").read().split("\n")[1:] if l]
    vocab = list(bytes_to_unicode().values())
    vocab = vocab + [v + "</w>" for v in vocab]
    vocab += ["".join(m.split(" ")) for m in merges]
    vocab += ["<|startoftext|>", "<|endoftext|>"]
    with open(os.path.join(dst, "vocab.json"), "w", encoding="utf-8") as f:
        json.dump({v: i for i, v in enumerate(vocab)}, f)
    shutil.copy(MERGES, os.path.join(dst, "merges.txt"))


def fixture_images():
    astro = skdata.astronaut()
    face = astro[20:190, 150:290]        # portrait-shaped crop around the face
    coffee = skdata.coffee()             # landscape 400x600
    return {"face_a.png": face, "scene_b.png": coffee, "face_c.png": astro[0:256, 100:356]}


def main():
    os.makedirs(OUT, exist_ok=True)
    torch.manual_seed(20240611)

    config = CLIPConfig(
        text_config=dict(hidden_size=32, intermediate_size=64, num_attention_heads=4,
                         num_hidden_layers=2, max_position_embeddings=77, vocab_size=49408,
                         eos_token_id=2, bos_token_id=0, pad_token_id=1),
        vision_config=dict(hidden_size=64, intermediate_size=128, num_attention_heads=4,
                           num_hidden_layers=2, image_size=224, patch_size=32),
        projection_dim=48,
    )
    model = CLIPModel(config).eval()
    with torch.no_grad():
        for p in model.parameters():
            p.normal_(0.0, 0.08)
        model.logit_scale.fill_(float(np.log(100.0)))
        for p in model.parameters():
            p.copy_(p.half().float())

    tensors = {k: v.detach().half().contiguous() for k, v in model.state_dict().items() if v.is_floating_point()}
    save_file(tensors, os.path.join(OUT, "model.safetensors"), metadata={"format": "pt"})
    config.to_json_file(os.path.join(OUT, "config.json"))
    shutil.copy(PREPROC, os.path.join(OUT, "preprocessor_config.json"))
    shutil.copy(MERGES, os.path.join(OUT, "merges.txt"))

    with tempfile.TemporaryDirectory() as tmp:
        write_vocab(tmp)
        tok = CLIPTokenizer(os.path.join(tmp, "vocab.json"), os.path.join(tmp, "merges.txt"))

    processor = CLIPImageProcessorPil(**json.load(open(PREPROC)))
    golden = {"images": {}, "prompts": []}

    for name, arr in fixture_images().items():
        Image.fromarray(arr).save(os.path.join(OUT, name))
        img = Image.open(os.path.join(OUT, name)).convert("RGB")
        pix = processor(images=img, return_tensors="pt")["pixel_values"]
        pix.numpy().astype("<f4").tofile(os.path.join(OUT, name + ".pixels.f32"))
        with torch.no_grad():
            emb = model.get_image_features(pixel_values=pix)
        emb = getattr(emb, "pooler_output", emb)
        golden["images"][name] = {"shape": list(pix.shape), "embedding": emb[0].tolist()}

    for prompt in PROMPTS:
        ids = tok(prompt)["input_ids"]
        oc = open_clip.tokenize([prompt])[0].tolist()
        oc = oc[: oc.index(49407) + 1]
        assert ids == oc, (prompt, ids, oc)
        with torch.no_grad():
            emb = model.get_text_features(input_ids=torch.tensor([ids]))
        emb = getattr(emb, "pooler_output", emb)
        golden["prompts"].append({"text": prompt, "ids": ids, "embedding": emb[0].tolist()})

    with open(os.path.join(OUT, "golden.json"), "w") as f:
        json.dump(golden, f, indent=1)


if __name__ == "__main__":
    main()
