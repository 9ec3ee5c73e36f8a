#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <string>
#include <vector>

namespace bratteli {

std::string sha256_hex(const std::string& data);

// 17 significant digits, "inf"/"-inf"/"nan" spelled out.
std::string format_fixed17(double x);

struct CommandReport {
    std::string command;
    nlohmann::json inputs = nlohmann::json::object();  // name -> sha256 of contents
    nlohmann::json results = nlohmann::json::object();
    std::vector<std::string> warnings;

    void add_input(const std::string& name, const std::string& contents);
    nlohmann::json to_json() const;
    // Sorted keys, two-space indent, trailing newline.
    std::string dump() const;
};

std::string csv_line(const std::vector<std::string>& cells);
// Header row "", col names...; then one row per matrix row.
std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& row_names,
                       const std::vector<std::string>& col_names);
nlohmann::json matrix_json(const Eigen::MatrixXd& m);
nlohmann::json vector_json(const Eigen::VectorXd& v);

}  // namespace bratteli
