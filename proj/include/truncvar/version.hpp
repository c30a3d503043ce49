#pragma once

#define TRUNCVAR_VERSION "0.1.0"
