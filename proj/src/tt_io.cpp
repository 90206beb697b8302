#include <openssl/evp.h>

#include <cstring>
#include <istream>
#include <ostream>
#include "json.hpp"

#include "qttagg/tt_core.hpp"

namespace qttagg {

namespace {

template <class T>
void put_le(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw InvalidArgument("QTT stream truncated");
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
    return static_cast<T>(v);
}

void put_double(std::ostream& os, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    put_le<uint64_t>(os, bits);
}

double get_double(std::istream& is) {
    uint64_t bits = get_le<uint64_t>(is);
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
}

// Row-major (left, phys, right) payload as little-endian complex128 pairs.
std::string core_payload(const Core& c) {
    std::string out;
    out.reserve(c.data.size() * 16);
    for (long l = 0; l < c.left; ++l)
        for (long s = 0; s < c.phys; ++s)
            for (long r = 0; r < c.right; ++r) {
                const cplx z = c(l, s, r);
                for (double d : {z.real(), z.imag()}) {
                    uint64_t bits;
                    std::memcpy(&bits, &d, sizeof bits);
                    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
                }
            }
    return out;
}

void fill_core(Core& c, const unsigned char* p, size_t len) {
    if (len < c.data.size() * 16) throw InvalidArgument("QTT core payload too short");
    for (long l = 0; l < c.left; ++l)
        for (long s = 0; s < c.phys; ++s)
            for (long r = 0; r < c.right; ++r) {
                double parts[2];
                for (double& d : parts) {
                    uint64_t bits = 0;
                    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(p[i]) << (8 * i);
                    std::memcpy(&d, &bits, sizeof d);
                    p += 8;
                }
                c(l, s, r) = cplx(parts[0], parts[1]);
            }
}

std::string b64_encode(const std::string& raw) {
    std::string out(4 * ((raw.size() + 2) / 3) + 1, '\0');
    int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                            reinterpret_cast<const unsigned char*>(raw.data()), static_cast<int>(raw.size()));
    out.resize(static_cast<size_t>(n));
    return out;
}

std::string b64_decode(const std::string& text) {
    std::string out(3 * (text.size() / 4) + 3, '\0');
    int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                            reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0) throw InvalidArgument("invalid base64 payload");
    size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<size_t>(n) - pad);
    return out;
}

}  // namespace

void write_binary(std::ostream& os, const TensorTrain& tt) {
    tt.validate();
    if (tt.size() > 0xffff) throw InvalidArgument("too many cores for QTT1 container");
    os.write("QTT1", 4);
    put_le<uint16_t>(os, 1);
    put_le<uint16_t>(os, static_cast<uint16_t>(tt.size()));
    for (const Core& c : tt.cores) {
        put_le<uint32_t>(os, static_cast<uint32_t>(c.left));
        put_le<uint16_t>(os, static_cast<uint16_t>(c.phys));
        put_le<uint32_t>(os, static_cast<uint32_t>(c.right));
        for (long l = 0; l < c.left; ++l)
            for (long s = 0; s < c.phys; ++s)
                for (long r = 0; r < c.right; ++r) {
                    put_double(os, c(l, s, r).real());
                    put_double(os, c(l, s, r).imag());
                }
    }
}

TensorTrain read_binary(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "QTT1", 4) != 0) throw InvalidArgument("not a QTT1 stream");
    const auto version = get_le<uint16_t>(is);
    if (version != 1) throw InvalidArgument("unsupported QTT1 version " + std::to_string(version));
    const auto count = get_le<uint16_t>(is);
    TensorTrain tt;
    for (uint16_t k = 0; k < count; ++k) {
        const long l = get_le<uint32_t>(is);
        const long p = get_le<uint16_t>(is);
        const long r = get_le<uint32_t>(is);
        Core c(l, p, r);
        for (long a = 0; a < l; ++a)
            for (long s = 0; s < p; ++s)
                for (long b = 0; b < r; ++b) {
                    const double re = get_double(is);
                    const double im = get_double(is);
                    c(a, s, b) = cplx(re, im);
                }
        tt.cores.push_back(std::move(c));
    }
    tt.validate();
    return tt;
}

std::string to_json(const TensorTrain& tt) {
    tt.validate();
    nlohmann::json j;
    j["magic"] = "QTT1";
    j["version"] = 1;
    j["cores"] = nlohmann::json::array();
    for (const Core& c : tt.cores) {
        j["cores"].push_back({{"left", c.left}, {"phys", c.phys}, {"right", c.right}, {"data", b64_encode(core_payload(c))}});
    }
    return j.dump();
}

TensorTrain from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("magic", "") != "QTT1") throw InvalidArgument("not a QTT1 JSON document");
    TensorTrain tt;
    for (const auto& jc : j.at("cores")) {
        Core c(jc.at("left").get<long>(), jc.at("phys").get<long>(), jc.at("right").get<long>());
        const std::string raw = b64_decode(jc.at("data").get<std::string>());
        fill_core(c, reinterpret_cast<const unsigned char*>(raw.data()), raw.size());
        tt.cores.push_back(std::move(c));
    }
    tt.validate();
    return tt;
}

}  // namespace qttagg
