#include "bratteli/report.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace bratteli {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string format_fixed17(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void CommandReport::add_input(const std::string& name, const std::string& contents) {
    inputs[name] = sha256_hex(contents);
}

nlohmann::json CommandReport::to_json() const {
    return {{"command", command}, {"inputs", inputs}, {"results", results}, {"warnings", warnings}};
}

std::string CommandReport::dump() const { return to_json().dump(2) + "\n"; }

std::string csv_line(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        const std::string& c = cells[i];
        if (c.find_first_of(",\"\n") == std::string::npos) {
            out += c;
            continue;
        }
        out += '"';
        for (char ch : c) {
            if (ch == '"') out += '"';
            out += ch;
        }
        out += '"';
    }
    return out + "\n";
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& row_names,
                       const std::vector<std::string>& col_names) {
    std::vector<std::string> head{""};
    head.insert(head.end(), col_names.begin(), col_names.end());
    std::string out = csv_line(head);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<std::string> row{row_names.at(i)};
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(format_fixed17(m(i, j)));
        out += csv_line(row);
    }
    return out;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
    nlohmann::json r = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) r.push_back(v(i));
    return r;
}

}  // namespace bratteli
