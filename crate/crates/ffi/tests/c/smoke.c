#include <math.h>
#include <stdio.h>
#include <string.h>

#include "camcal.h"

#define CHECK(cond)                                                       \
    do {                                                                  \
        if (!(cond)) {                                                    \
            const char *e = camcal_last_error();                          \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond, \
                    e ? e : "no error");                                  \
            return 1;                                                     \
        }                                                                 \
    } while (0)

int main(void) {
    CamcalIntrinsics k = {90.0, 80.0, 31.5, 23.5};
    CamcalCameraImage *img = NULL;
    CHECK(camcal_encode(&k, 64, 48, NULL, CAMCAL_VARIANT_CONSTANT, 0.5, &img) ==
          CAMCAL_STATUS_OK);
    CHECK(camcal_image_width(img) == 64 && camcal_image_height(img) == 48);

    CamcalRansacConfig cfg = camcal_ransac_config_default();
    CamcalIntrinsics out;
    CamcalRecoveryStats stats;
    CHECK(camcal_recover(img, &cfg, &out, &stats) == CAMCAL_STATUS_OK);
    double e_f = 1.0, e_b = 1.0;
    CHECK(camcal_calib_error(&out, &k, 64, 48, &e_f, &e_b) == CAMCAL_STATUS_OK);
    CHECK(e_f < 1e-9 && e_b < 1e-9);

    CHECK(camcal_encode(NULL, 64, 48, NULL, CAMCAL_VARIANT_CONSTANT, 0.5, &img) ==
          CAMCAL_STATUS_NULL_POINTER);
    CHECK(camcal_last_error() != NULL);

    camcal_image_free(img);
    printf("ok %s\n", camcal_version());
    return 0;
}
