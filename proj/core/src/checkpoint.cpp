/*
 * Copyright 2026 The liplock authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "liplock/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "liplock/errors.hpp"

namespace liplock {

using nlohmann::json;

namespace {

enum : uint8_t {
    kKindMeta = 0,
    kKindLinear = 1,
    kKindConv = 2,
    kKindAct = 3,
    kKindL2Mha = 4,
    kKindDpMha = 5,
    kKindPatch = 6,
};

json layer_to_json(const Layer& l);

json layers_to_json(const std::vector<Layer>& ls) {
    json a = json::array();
    for (const auto& l : ls) a.push_back(layer_to_json(l));
    return a;
}

json layer_to_json(const Layer& l) {
    if (const auto* lin = std::get_if<Linear>(&l.v))
        return {{"kind", "linear"},
                {"out", lin->W.dim(0)},
                {"in", lin->W.dim(1)},
                {"bias", !lin->b.empty()}};
    if (const auto* cv = std::get_if<Conv2D>(&l.v))
        return {{"kind", "conv"},   {"oc", cv->K.dim(0)},      {"ic", cv->K.dim(1)},
                {"kh", cv->K.dim(2)}, {"kw", cv->K.dim(3)},    {"stride", cv->stride},
                {"pad", cv->pad},   {"bias", !cv->b.empty()}};
    if (const auto* ac = std::get_if<Activation>(&l.v))
        return {{"kind", "act"}, {"f", act_name(ac->kind)}};
    if (const auto* at = std::get_if<L2Mha>(&l.v))
        return {{"kind", "l2mha"}, {"heads", at->heads}, {"dim", at->dim}, {"seq", at->seq}};
    if (const auto* dp = std::get_if<DpMha>(&l.v))
        return {{"kind", "dpmha"}, {"heads", dp->heads}, {"dim", dp->dim}};
    if (const auto* pe = std::get_if<PatchEmbed>(&l.v))
        return {{"kind", "patch"},
                {"patch", pe->patch},
                {"embed", pe->W.dim(0)},
                {"pvol", pe->W.dim(1)},
                {"tokens", pe->pos.dim(0)},
                {"bias", !pe->b.empty()}};
    const auto* rs = std::get_if<Residual>(&l.v);
    return {{"kind", "res"}, {"inner", layers_to_json(rs->inner)}};
}

Layer layer_from_json(const json& j);

std::vector<Layer> layers_from_json(const json& a) {
    std::vector<Layer> ls;
    for (const auto& j : a) ls.push_back(layer_from_json(j));
    return ls;
}

Layer layer_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    Layer l;
    if (kind == "linear") {
        Linear lin;
        lin.W = Tensor({j.at("out").get<int>(), j.at("in").get<int>()});
        if (j.at("bias").get<bool>()) lin.b = Tensor({j.at("out").get<int>()});
        l.v = std::move(lin);
    } else if (kind == "conv") {
        Conv2D cv;
        cv.K = Tensor({j.at("oc").get<int>(), j.at("ic").get<int>(), j.at("kh").get<int>(),
                       j.at("kw").get<int>()});
        if (j.at("bias").get<bool>()) cv.b = Tensor({j.at("oc").get<int>()});
        cv.stride = j.at("stride").get<int>();
        cv.pad = j.at("pad").get<int>();
        l.v = std::move(cv);
    } else if (kind == "act") {
        l.v = Activation{act_from_name(j.at("f").get<std::string>())};
    } else if (kind == "l2mha") {
        L2Mha at;
        at.heads = j.at("heads").get<int>();
        at.dim = j.at("dim").get<int>();
        at.seq = j.at("seq").get<int>();
        int d = at.dim / at.heads;
        at.wqk = Tensor({at.heads, d, at.dim});
        at.wv = Tensor({at.heads, d, d});
        at.wo = Tensor({at.dim, at.dim});
        l.v = std::move(at);
    } else if (kind == "dpmha") {
        DpMha dp;
        dp.heads = j.at("heads").get<int>();
        dp.dim = j.at("dim").get<int>();
        int d = dp.dim / dp.heads;
        dp.wq = Tensor({dp.heads, d, dp.dim});
        dp.wk = Tensor({dp.heads, d, dp.dim});
        dp.wv = Tensor({dp.heads, d, dp.dim});
        dp.wo = Tensor({dp.dim, dp.dim});
        l.v = std::move(dp);
    } else if (kind == "patch") {
        PatchEmbed pe;
        pe.patch = j.at("patch").get<int>();
        pe.W = Tensor({j.at("embed").get<int>(), j.at("pvol").get<int>()});
        if (j.at("bias").get<bool>()) pe.b = Tensor({j.at("embed").get<int>()});
        pe.pos = Tensor({j.at("tokens").get<int>(), j.at("embed").get<int>()});
        l.v = std::move(pe);
    } else if (kind == "res") {
        l.v = Residual{layers_from_json(j.at("inner"))};
    } else {
        throw CkptError(CkptFault::bad_record, "unknown layer kind '" + kind + "'");
    }
    return l;
}

uint8_t record_kind(const Layer& l) {
    if (std::get_if<Linear>(&l.v)) return kKindLinear;
    if (std::get_if<Conv2D>(&l.v)) return kKindConv;
    if (std::get_if<Activation>(&l.v)) return kKindAct;
    if (std::get_if<L2Mha>(&l.v)) return kKindL2Mha;
    if (std::get_if<DpMha>(&l.v)) return kKindDpMha;
    if (std::get_if<PatchEmbed>(&l.v)) return kKindPatch;
    return kKindMeta;
}

// The record kind of the layer owning a parameter path.
uint8_t kind_for_path(const Network& net, const std::string& path) {
    const std::vector<Layer>* layers = &net.layers;
    size_t pos = 0;
    uint8_t kind = kKindMeta;
    while (true) {
        size_t l = path.find('L', pos);
        size_t dot = path.find('.', l);
        int idx = std::stoi(path.substr(l + 1, dot - l - 1));
        const Layer& layer = (*layers)[static_cast<size_t>(idx)];
        if (const auto* rs = std::get_if<Residual>(&layer.v)) {
            size_t inner = path.find("inner.", dot);
            if (inner != std::string::npos) {
                layers = &rs->inner;
                pos = inner + 6;
                continue;
            }
        }
        kind = record_kind(layer);
        break;
    }
    return kind;
}

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(static_cast<uint8_t>(v & 0xff));
    b.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

struct Reader {
    const std::vector<uint8_t>& b;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > b.size())
            throw CkptError(CkptFault::truncated, "checkpoint truncated at byte " + std::to_string(pos));
    }
    uint8_t u8() {
        need(1);
        return b[pos++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(b[pos] | (b[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[pos + static_cast<size_t>(i)]) << (8 * i);
        pos += 4;
        return v;
    }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(b.data() + pos), n);
        pos += n;
        return s;
    }
};

} // namespace

std::string describe_network(const Network& net) {
    json j;
    j["name"] = net.name;
    j["classes"] = net.classes;
    j["seed"] = net.seed;
    j["prov"] = net.provenance;
    j["input"] = net.input_shape;
    j["layers"] = layers_to_json(net.layers);
    return j.dump();
}

void save_checkpoint(const Network& net, const std::string& path) {
    std::vector<uint8_t> buf;
    buf.insert(buf.end(), {'C', 'L', 'I', 'P'});
    put_u32(buf, kCheckpointVersion);

    struct Rec {
        uint8_t kind;
        std::string name;
        std::vector<int> shape;
        const Tensor* t;
    };
    std::vector<Rec> recs;
    recs.push_back(Rec{kKindMeta, describe_network(net), {}, nullptr});
    visit_params(net, [&](const std::string& p, const Tensor& t) {
        recs.push_back(Rec{kind_for_path(net, p), p, t.shape(), &t});
    });

    put_u32(buf, static_cast<uint32_t>(recs.size()));
    uLong crc = crc32(0L, Z_NULL, 0);
    for (const auto& r : recs) {
        buf.push_back(r.kind);
        if (r.name.size() > 0xffff)
            throw data_error("checkpoint record name too long");
        put_u16(buf, static_cast<uint16_t>(r.name.size()));
        buf.insert(buf.end(), r.name.begin(), r.name.end());
        buf.push_back(static_cast<uint8_t>(r.shape.size()));
        for (int d : r.shape) put_u32(buf, static_cast<uint32_t>(d));
        if (r.t) {
            size_t off = buf.size();
            size_t bytes = static_cast<size_t>(r.t->numel()) * 4;
            buf.resize(off + bytes);
            std::memcpy(buf.data() + off, r.t->data(), bytes);
            crc = crc32(crc, buf.data() + off, static_cast<uInt>(bytes));
        }
    }
    put_u32(buf, static_cast<uint32_t>(crc));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw data_error("cannot open checkpoint for writing: " + path);
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw data_error("checkpoint write failed: " + path);
}

Network load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open checkpoint: " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r{buf};
    if (r.str(4) != "CLIP") throw CkptError(CkptFault::bad_magic, "bad magic: not a checkpoint");
    uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw CkptError(CkptFault::bad_version,
                        "unsupported checkpoint version " + std::to_string(version));
    uint32_t count = r.u32();
    if (count == 0) throw CkptError(CkptFault::bad_record, "checkpoint has no records");

    Network net;
    std::vector<std::pair<std::string, Tensor>> tensors;
    uLong crc = crc32(0L, Z_NULL, 0);
    for (uint32_t i = 0; i < count; ++i) {
        uint8_t kind = r.u8();
        uint16_t nlen = r.u16();
        std::string name = r.str(nlen);
        uint8_t rank = r.u8();
        if (rank > 4) throw CkptError(CkptFault::bad_shape, "record rank > 4");
        std::vector<int> shape;
        int64_t numel = rank == 0 ? 0 : 1;
        for (int k = 0; k < rank; ++k) {
            uint32_t d = r.u32();
            if (d == 0 || d > (1u << 24)) throw CkptError(CkptFault::bad_shape, "bad dimension");
            shape.push_back(static_cast<int>(d));
            numel *= d;
        }
        if (i == 0) {
            if (kind != kKindMeta || rank != 0)
                throw CkptError(CkptFault::bad_record, "first record is not metadata");
            json j;
            try {
                j = json::parse(name);
                net.name = j.at("name").get<std::string>();
                net.classes = j.at("classes").get<int>();
                net.seed = j.at("seed").get<uint64_t>();
                net.provenance = j.at("prov").get<std::string>();
                net.input_shape = j.at("input").get<std::vector<int>>();
                net.layers = layers_from_json(j.at("layers"));
            } catch (const json::exception& e) {
                throw CkptError(CkptFault::bad_record, std::string("bad metadata: ") + e.what());
            }
            continue;
        }
        size_t bytes = static_cast<size_t>(numel) * 4;
        r.need(bytes);
        Tensor t(shape);
        std::memcpy(t.data(), buf.data() + r.pos, bytes);
        crc = crc32(crc, buf.data() + r.pos, static_cast<uInt>(bytes));
        r.pos += bytes;
        tensors.emplace_back(name, std::move(t));
    }
    uint32_t stored = r.u32();
    if (r.pos != buf.size())
        throw CkptError(CkptFault::bad_record, "trailing bytes after checksum");
    if (stored != static_cast<uint32_t>(crc))
        throw CkptError(CkptFault::bad_checksum, "payload checksum mismatch");

    size_t next = 0;
    visit_params(net, [&](const std::string& p, Tensor& t) {
        if (next >= tensors.size())
            throw CkptError(CkptFault::bad_record, "missing parameter record for " + p);
        auto& [name, data] = tensors[next++];
        if (name != p)
            throw CkptError(CkptFault::bad_record,
                            "parameter order mismatch: expected " + p + ", found " + name);
        if (data.shape() != t.shape())
            throw CkptError(CkptFault::bad_shape, "shape mismatch for " + p + ": stored " +
                                                      data.shape_str() + ", expected " + t.shape_str());
        t = std::move(data);
    });
    if (next != tensors.size())
        throw CkptError(CkptFault::bad_record, "extra parameter records");
    return net;
}

} // namespace liplock
