// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#include "skiff/digest.hpp"

#include "skiff/error.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <memory>
#include <vector>

namespace fs = std::filesystem;

namespace skiff::digest {

namespace {

struct CtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
using CtxPtr = std::unique_ptr<EVP_MD_CTX, CtxDeleter>;

CtxPtr new_sha256_ctx() {
    CtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::Io, "sha256 init failed");
    return ctx;
}

void update(EVP_MD_CTX* ctx, std::string_view bytes) {
    if (EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1)
        throw Error(ErrorKind::Io, "sha256 update failed");
}

std::string finish_hex(EVP_MD_CTX* ctx) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx, md, &len) != 1)
        throw Error(ErrorKind::Io, "sha256 final failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

void update_from_file(EVP_MD_CTX* ctx, const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read file: " + path.string());
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        update(ctx, std::string_view(buf, static_cast<size_t>(in.gcount())));
}

} // namespace

std::string sha256_hex(std::string_view bytes) {
    auto ctx = new_sha256_ctx();
    update(ctx.get(), bytes);
    return finish_hex(ctx.get());
}

std::string sha256_file_hex(const fs::path& path) {
    auto ctx = new_sha256_ctx();
    update_from_file(ctx.get(), path);
    return finish_hex(ctx.get());
}

std::string tree_digest_hex(const fs::path& root) {
    std::vector<fs::path> rel_paths;
    if (fs::exists(root)) {
        for (const auto& entry : fs::recursive_directory_iterator(
                 root, fs::directory_options::none))
            rel_paths.push_back(fs::relative(entry.path(), root));
    }
    std::sort(rel_paths.begin(), rel_paths.end());

    auto ctx = new_sha256_ctx();
    for (const auto& rel : rel_paths) {
        fs::path abs = root / rel;
        update(ctx.get(), rel.generic_string());
        update(ctx.get(), std::string_view("\0", 1));
        if (fs::is_symlink(abs)) {
            update(ctx.get(), "L");
            update(ctx.get(), fs::read_symlink(abs).string());
        } else if (fs::is_directory(abs)) {
            update(ctx.get(), "D");
        } else {
            update(ctx.get(), "F");
            update_from_file(ctx.get(), abs);
        }
        update(ctx.get(), std::string_view("\0", 1));
    }
    return finish_hex(ctx.get());
}

} // namespace skiff::digest
