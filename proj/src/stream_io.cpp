// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "pmb/stream.hpp"

namespace pmb {

namespace {

constexpr char kMagic[4] = {'P', 'M', 'B', 'S'};
constexpr std::uint32_t kVersion = 1;

// Serialization is little-endian by contract; these helpers write the bytes
// explicitly so big-endian hosts would still produce the same files.
void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_)
            throw IoError("cannot open stream file: " + path);
    }

    std::uint32_t u32() {
        unsigned char buf[4];
        read(buf, 4);
        return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
               (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
    }

    std::uint64_t u64() {
        std::uint64_t lo = u32();
        std::uint64_t hi = u32();
        return lo | (hi << 32);
    }

    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    void raw(char* buf, std::size_t n) { read(reinterpret_cast<unsigned char*>(buf), n); }

    std::size_t offset() const { return offset_; }

private:
    void read(unsigned char* buf, std::size_t n) {
        in_.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw TruncatedFile(path_ + ": truncated at byte " + std::to_string(offset_ + in_.gcount()),
                                offset_ + static_cast<std::size_t>(in_.gcount()));
        offset_ += n;
    }

    std::string path_;
    std::ifstream in_;
    std::size_t offset_ = 0;
};

}  // namespace

void save_stream(const std::string& path, const Stream& stream) {
    std::string out;
    const std::size_t frame_bytes =
        8 + (stream.frames.empty() ? 0 : stream.frames.front().data.size() * 4);
    out.reserve(64 + stream.frames.size() * frame_bytes);
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, stream.base_fps);
    put_u32(out, stream.height);
    put_u32(out, stream.width);
    put_u32(out, stream.depth);
    put_u64(out, stream.frames.size());
    put_u32(out, static_cast<std::uint32_t>(stream.scenes.size()));
    for (const auto& scene : stream.scenes) {
        put_u32(out, scene.scene_id);
        put_u64(out, scene.start_tick);
        put_u64(out, scene.end_tick);
        for (float v : scene.archetype)
            put_f32(out, v);
    }
    const std::size_t grid_size = static_cast<std::size_t>(stream.height) * stream.width * stream.depth;
    for (const auto& frame : stream.frames) {
        put_u64(out, frame.tick);
        if (frame.data.size() != grid_size)
            throw IoError("save_stream: frame data size does not match header dims");
        for (float v : frame.data)
            put_f32(out, v);
    }

    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f)
            throw IoError("cannot open for writing: " + tmp);
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f)
            throw IoError("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError("rename failed: " + tmp + " -> " + path + ": " + ec.message());
}

Stream load_stream(const std::string& path) {
    Reader in(path);

    char magic[4];
    in.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw BadMagic(path + ": bad magic (expected PMBS)");
    std::uint32_t version = in.u32();
    if (version != kVersion)
        throw VersionMismatch(path + ": unsupported version " + std::to_string(version));

    Stream stream;
    stream.base_fps = in.u32();
    stream.height = in.u32();
    stream.width = in.u32();
    stream.depth = in.u32();
    std::uint64_t frame_count = in.u64();
    std::uint32_t scene_count = in.u32();

    stream.scenes.reserve(scene_count);
    for (std::uint32_t s = 0; s < scene_count; ++s) {
        SceneAnnotation scene;
        scene.scene_id = in.u32();
        scene.start_tick = in.u64();
        scene.end_tick = in.u64();
        scene.archetype.resize(stream.depth);
        for (auto& v : scene.archetype)
            v = in.f32();
        stream.scenes.push_back(std::move(scene));
    }

    const std::size_t grid_size = static_cast<std::size_t>(stream.height) * stream.width * stream.depth;
    stream.frames.reserve(frame_count);
    for (std::uint64_t i = 0; i < frame_count; ++i) {
        StreamFrame frame;
        frame.tick = in.u64();
        frame.data.resize(grid_size);
        for (auto& v : frame.data)
            v = in.f32();
        stream.frames.push_back(std::move(frame));
    }
    return stream;
}

}  // namespace pmb
